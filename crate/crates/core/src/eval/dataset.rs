use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};
use crate::jsonl;
use crate::kb::{IngestMode, Triple};
use crate::qq::{AnswerSource, QueryType};

use super::normalize::normalize_answer;

/// One annotated question: image, question, answer, supporting fact and the
/// query type that retrieves the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAInstance {
    /// 1-based line number in the dataset file.
    #[serde(skip)]
    pub qid: usize,
    pub image_id: String,
    pub question: String,
    pub answer: String,
    pub fact: Triple,
    pub query_type: QueryType,
}

impl QAInstance {
    /// The answer must be nonempty, the fact's predicate kind must match the
    /// query type, and the answer must name the side of the fact selected by
    /// the answer source (subject for Image, object for KB).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.image_id.trim().is_empty() {
            return bad("empty image_id".into());
        }
        if self.question.trim().is_empty() {
            return bad("empty question".into());
        }
        let answer = normalize_answer(&self.answer);
        if answer.is_empty() {
            return bad("empty answer".into());
        }
        if self.fact.predicate.kind() != self.query_type.rel {
            return bad(format!(
                "fact predicate {} does not match query type {}",
                self.fact.predicate, self.query_type
            ));
        }
        let side = match self.query_type.answer_source {
            AnswerSource::Image => &self.fact.subject,
            AnswerSource::KB => &self.fact.object,
        };
        if normalize_answer(side.canonical()) != answer {
            return bad(format!(
                "answer {:?} is not the {} side of {}",
                self.answer, self.query_type.answer_source, self.fact
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetIngest {
    pub instances: Vec<QAInstance>,
    pub rejects: Vec<RecordError>,
}

pub fn ingest_dataset_reader<R: BufRead>(reader: R, mode: IngestMode) -> Result<DatasetIngest> {
    let records = jsonl::read_records::<QAInstance, _>(reader).map_err(|e| Error::io("", e))?;
    let mut out = DatasetIngest::default();
    for record in records {
        let parsed = record.and_then(|(line, mut qa)| {
            qa.qid = line;
            qa.validate().map(|()| qa).map_err(|e| RecordError {
                line,
                message: e.to_string(),
            })
        });
        match parsed {
            Ok(qa) => out.instances.push(qa),
            Err(source) if mode == IngestMode::Strict => {
                return Err(Error::Record {
                    path: Default::default(),
                    source,
                })
            }
            Err(e) => out.rejects.push(e),
        }
    }
    Ok(out)
}

/// Load a JSON Lines QA dataset.
pub fn ingest_dataset(path: &Path, mode: IngestMode) -> Result<DatasetIngest> {
    ingest_dataset_reader(jsonl::open(path)?, mode).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Record { source, .. } => Error::Record {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// A system's ranked output for one question in one split. Records without
/// a split apply to every split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    /// The question's qid.
    pub question: usize,
    pub answers: Vec<String>,
    #[serde(default)]
    pub facts: Vec<Triple>,
    /// Seed of the run that produced the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Ranked outputs keyed by split and question.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    by_key: BTreeMap<(Option<usize>, usize), PredictionRecord>,
}

impl Predictions {
    pub fn insert(&mut self, record: PredictionRecord) {
        self.by_key.insert((record.split, record.question), record);
    }

    /// Output for `qid` in `split`, falling back to a split-free record.
    pub fn get(&self, split: usize, qid: usize) -> Option<&PredictionRecord> {
        self.by_key
            .get(&(Some(split), qid))
            .or_else(|| self.by_key.get(&(None, qid)))
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &PredictionRecord> {
        self.by_key.values()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(jsonl::read_strict::<PredictionRecord>(path)?
            .into_iter()
            .map(|(_, r)| r)
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write(path, self.records())
    }
}

impl FromIterator<PredictionRecord> for Predictions {
    fn from_iter<I: IntoIterator<Item = PredictionRecord>>(iter: I) -> Self {
        let mut p = Predictions::default();
        for r in iter {
            p.insert(r);
        }
        p
    }
}
