//! Run configuration in a `key = value` text format.
//!
//! ```text
//! # paths are relative to the config file
//! kb = data/kb.jsonl
//! annotations = data/annotations.jsonl
//! dataset = data/dataset.jsonl
//! taxonomy = data/taxonomy.tsv
//! query_types = classifier
//! k = 3
//! epochs = 50
//! seed = 1
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::IngestMode;
use crate::qq::TrainingConfig;

/// How a run answers questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Query the KB with ground-truth query types.
    #[default]
    GtQuery,
    /// Query the KB with the classifier's top-k query types.
    Classifier,
    /// Always answer with the most frequent training answers.
    Frequent,
    /// Classify the question into the most frequent training answers.
    LstmQuestion,
    /// As `LstmQuestion`, with image features appended.
    LstmQuestionImage,
    /// Image features only, question zeroed.
    LstmImage,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GtQuery,
        Method::Classifier,
        Method::Frequent,
        Method::LstmQuestion,
        Method::LstmQuestionImage,
        Method::LstmImage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GtQuery => "gt-query",
            Method::Classifier => "classifier",
            Method::Frequent => "frequent",
            Method::LstmQuestion => "lstm-question",
            Method::LstmQuestionImage => "lstm-question-image",
            Method::LstmImage => "lstm-image",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub kb: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    /// A trained classifier; when absent the classifier is trained per split.
    pub checkpoint: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub human_answers: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub method: Method,
    /// Query types tried per question.
    pub k: usize,
    pub n_splits: usize,
    #[serde(with = "ingest_mode")]
    pub ingest: IngestMode,
    pub seed: u64,
    pub training: TrainingConfig,
}

mod ingest_mode {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::kb::IngestMode;

    pub fn serialize<S: Serializer>(m: &IngestMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match m {
            IngestMode::Skip => "skip",
            IngestMode::Strict => "strict",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<IngestMode, D::Error> {
        match String::deserialize(d)?.as_str() {
            "skip" => Ok(IngestMode::Skip),
            "strict" => Ok(IngestMode::Strict),
            other => Err(serde::de::Error::custom(format!("unknown ingest mode {other:?}"))),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kb: None,
            annotations: None,
            dataset: None,
            taxonomy: None,
            splits: None,
            checkpoint: None,
            features: None,
            human_answers: None,
            output_dir: PathBuf::from("out"),
            method: Method::default(),
            k: 3,
            n_splits: 5,
            ingest: IngestMode::Skip,
            seed: 1,
            training: TrainingConfig::default(),
        }
    }
}

/// Keys accepted by [`RunConfig::set`].
pub const KEYS: [&str; 25] = [
    "kb",
    "annotations",
    "dataset",
    "taxonomy",
    "splits",
    "checkpoint",
    "features",
    "human_answers",
    "output_dir",
    "method",
    "k",
    "n_splits",
    "ingest",
    "seed",
    "batch_size",
    "learning_rate",
    "clip",
    "dropout",
    "epochs",
    "l2",
    "embed_dim",
    "hidden_dim",
    "optimizer",
    "train_seed",
    "query_types",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Parse `key = value` lines. Blank lines and `#` comments are skipped;
    /// relative paths are taken relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            config
                .set(key.trim(), value.trim(), base_dir)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Set one key. `seed` sets both the run seed and the training seed;
    /// `train_seed` overrides the latter alone.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let path = || Some(base_dir.join(value));
        let t = &mut self.training;
        match key {
            "kb" => self.kb = path(),
            "annotations" => self.annotations = path(),
            "dataset" => self.dataset = path(),
            "taxonomy" => self.taxonomy = path(),
            "splits" => self.splits = path(),
            "checkpoint" => self.checkpoint = path(),
            "features" => self.features = path(),
            "human_answers" => self.human_answers = path(),
            "output_dir" => self.output_dir = base_dir.join(value),
            "method" => self.method = value.parse()?,
            // shorthand for the two query-type methods
            "query_types" => {
                self.method = match value {
                    "gt" | "ground-truth" => Method::GtQuery,
                    "classifier" | "predicted" => Method::Classifier,
                    _ => return Err(Error::Config(format!("query_types: {value:?} is not gt or classifier"))),
                }
            }
            "k" => self.k = parse(key, value)?,
            "n_splits" => self.n_splits = parse(key, value)?,
            "ingest" => {
                self.ingest = match value {
                    "skip" => IngestMode::Skip,
                    "strict" => IngestMode::Strict,
                    _ => return Err(Error::Config(format!("ingest: {value:?} is not skip or strict"))),
                }
            }
            "seed" => {
                self.seed = parse(key, value)?;
                t.seed = self.seed;
            }
            "train_seed" => t.seed = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "clip" => t.clip = parse(key, value)?,
            "dropout" => t.dropout = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "l2" => t.l2 = parse(key, value)?,
            "embed_dim" => t.embed_dim = parse(key, value)?,
            "hidden_dim" => t.hidden_dim = parse(key, value)?,
            "optimizer" => t.optimizer = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.n_splits == 0 {
            return Err(Error::Config("n_splits must be at least 1".into()));
        }
        self.training.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "# run\nkb = data/kb.jsonl\nmethod = classifier\nk = 1\nepochs = 3\nseed = 9\n\noptimizer = sgd\n";
        let c = RunConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.kb.as_deref(), Some(Path::new("/base/data/kb.jsonl")));
        assert_eq!(c.method, Method::Classifier);
        assert_eq!(c.k, 1);
        assert_eq!(c.training.epochs, 3);
        assert_eq!(c.seed, 9);
        assert_eq!(c.training.seed, 9);
        assert_eq!(c.training.optimizer, crate::qq::Optimizer::Sgd);
    }

    #[test]
    fn reports_bad_lines() {
        let err = RunConfig::parse("kb = x\nnonsense\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::parse("colour = red\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(RunConfig::parse("k = three\n", Path::new(".")).is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let mut c = RunConfig::default();
        for key in KEYS {
            let value = match key {
                "method" => "frequent",
                "optimizer" => "adam",
                "ingest" => "strict",
                "query_types" => "gt",
                "learning_rate" | "clip" | "dropout" | "l2" => "0.1",
                _ => "1",
            };
            c.set(key, value, Path::new(".")).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }

    #[test]
    fn round_trips_as_json() {
        let c = RunConfig::default();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
    }
}
