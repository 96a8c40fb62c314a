//! End-to-end runs: ingest, optionally train, answer every test question of
//! every split, evaluate.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::answer::{answer, AnswerContext, AnswerFrequencyTable, AnswerStatus, QueryTypeSource};
use crate::concepts::{ingest_annotations, AnnotationSet};
use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{
    baseline_frequent, baseline_lstm_answers, evaluate, ingest_dataset, make_splits,
    normalize_answer, test_questions, EvalReport, FeatureTable, LstmBaselineOptions,
    PredictionRecord, Predictions, QAInstance, SplitSpec, TaxonomyTree, CUTOFFS,
};
use crate::jsonl;
use crate::kb::{ingest_kb, Triple, TripleStore};
use crate::qq::{QqClassifier, QueryRegistry, QueryType};

/// Answers kept per question; the largest Top-k cutoff.
pub const MAX_ANSWERS: usize = CUTOFFS[2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedQueryType {
    pub query_type: QueryType,
    pub probability: f64,
}

/// What the answerer did for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seed: u64,
    pub split: usize,
    pub qid: usize,
    pub image_id: String,
    pub question: String,
    pub query_types: Vec<TracedQueryType>,
    pub queried_facts: Vec<Triple>,
    pub chosen_fact: Option<Triple>,
    pub answer: Option<String>,
    pub status: AnswerStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: EvalReport,
    pub predictions: Predictions,
    /// Empty for methods that do not query the KB.
    pub trace: Vec<TraceRecord>,
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const RUN_FILE: &str = "run.json";

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn require(path: &Option<PathBuf>, key: &str, name: &'static str) -> Result<PathBuf> {
    let p = path
        .clone()
        .ok_or_else(|| Error::Config(format!("{key} is not set")).in_stage(name))?;
    if !p.exists() {
        return Err(Error::io(&p, std::io::Error::from(std::io::ErrorKind::NotFound)).in_stage(name));
    }
    Ok(p)
}

/// Inputs of a run, loaded once.
pub struct Inputs {
    pub store: TripleStore,
    pub annotations: AnnotationSet,
    pub dataset: Vec<QAInstance>,
    pub taxonomy: Option<TaxonomyTree>,
    pub splits: SplitSpec,
    pub human: Option<Predictions>,
}

/// Load every input named by the config. Missing files are reported before
/// anything is read, each under its stage name.
pub fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let kb = require(&config.kb, "kb", "kb ingest")?;
    let annotations = require(&config.annotations, "annotations", "annotations ingest")?;
    let dataset = require(&config.dataset, "dataset", "dataset ingest")?;
    let taxonomy = match &config.taxonomy {
        Some(_) => Some(require(&config.taxonomy, "taxonomy", "taxonomy ingest")?),
        None => None,
    };
    if config.splits.is_some() {
        require(&config.splits, "splits", "splits")?;
    }
    if config.checkpoint.is_some() {
        require(&config.checkpoint, "checkpoint", "checkpoint load")?;
    }
    if config.features.is_some() {
        require(&config.features, "features", "features ingest")?;
    }
    if config.human_answers.is_some() {
        require(&config.human_answers, "human_answers", "human answers ingest")?;
    }

    let (store, _) = stage("kb ingest", ingest_kb(&kb, config.ingest))?;
    let annotations = stage("annotations ingest", ingest_annotations(&annotations))?;
    let dataset = stage("dataset ingest", ingest_dataset(&dataset, config.ingest))?.instances;
    let taxonomy = match taxonomy {
        Some(p) => Some(stage("taxonomy ingest", TaxonomyTree::load(&p))?),
        None => None,
    };
    let splits = match &config.splits {
        Some(p) => {
            let spec: SplitSpec = stage("splits", jsonl::read_json(p))?;
            stage("splits", spec.validate())?;
            spec
        }
        None => {
            let mut ids: Vec<&str> = dataset.iter().map(|q| q.image_id.as_str()).collect();
            ids.sort();
            ids.dedup();
            stage("splits", make_splits(&ids, config.n_splits, config.seed))?
        }
    };
    let human = match &config.human_answers {
        Some(p) => Some(stage("human answers ingest", Predictions::load(p))?),
        None => None,
    };
    Ok(Inputs {
        store,
        annotations,
        dataset,
        taxonomy,
        splits,
        human,
    })
}

/// Training questions of every split: those whose image is in the train set.
pub fn train_questions<'a>(dataset: &'a [QAInstance], splits: &SplitSpec) -> Vec<Vec<&'a QAInstance>> {
    splits
        .splits
        .iter()
        .map(|s| {
            let train: HashSet<&str> = s.train.iter().map(String::as_str).collect();
            dataset
                .iter()
                .filter(|q| train.contains(q.image_id.as_str()))
                .collect()
        })
        .collect()
}

/// Ranked answers with duplicates (after normalization) removed, and the
/// supporting facts of the candidates in rank order.
fn top_answers<'a>(candidates: impl Iterator<Item = (&'a str, Option<&'a Triple>)>) -> (Vec<String>, Vec<Triple>) {
    let mut seen = HashSet::new();
    let mut answers = Vec::new();
    let mut facts = Vec::new();
    for (a, f) in candidates {
        if facts.len() < MAX_ANSWERS {
            facts.extend(f.cloned());
        }
        if answers.len() < MAX_ANSWERS && seen.insert(normalize_answer(a)) {
            answers.push(a.to_string());
        }
        if answers.len() >= MAX_ANSWERS && facts.len() >= MAX_ANSWERS {
            break;
        }
    }
    (answers, facts)
}

fn registry_of(dataset: &[&QAInstance]) -> QueryRegistry {
    QueryRegistry::from_types(dataset.iter().map(|q| q.query_type))
}

/// Run the configured method over every split and evaluate it.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    stage("config", config.validate())?;
    let inputs = load_inputs(config)?;
    run_with_inputs(config, &inputs)
}

pub fn run_with_inputs(config: &RunConfig, inputs: &Inputs) -> Result<PipelineOutput> {
    let tests = test_questions(&inputs.dataset, &inputs.splits);
    let trains = train_questions(&inputs.dataset, &inputs.splits);
    let checkpoint = match &config.checkpoint {
        Some(p) if config.method == Method::Classifier => Some(stage("checkpoint load", QqClassifier::load(p))?),
        _ => None,
    };
    let features = match &config.features {
        Some(p) => Some(stage("features ingest", FeatureTable::load(p, None))?),
        None => None,
    };

    let mut predictions = Predictions::default();
    let mut trace = Vec::new();
    for (split, (test, train)) in tests.iter().zip(&trains).enumerate() {
        if train.is_empty() {
            return Err(Error::Invalid(format!("split {split} has no training questions")).in_stage("training"));
        }
        let freq = AnswerFrequencyTable::from_answers(train.iter().map(|q| &q.answer));
        match config.method {
            Method::GtQuery | Method::Classifier => {
                let trained;
                let model = match (config.method, &checkpoint) {
                    (Method::GtQuery, _) => None,
                    (_, Some(m)) => Some(m),
                    (_, None) => {
                        let data: Vec<(&str, QueryType)> =
                            train.iter().map(|q| (q.question.as_str(), q.query_type)).collect();
                        trained = stage(
                            "training",
                            QqClassifier::train(&data, registry_of(train), &config.training),
                        )?;
                        Some(&trained)
                    }
                };
                let ctx = AnswerContext {
                    store: &inputs.store,
                    annotations: &inputs.annotations,
                    frequencies: &freq,
                };
                for qa in test {
                    let source = match model {
                        None => QueryTypeSource::GroundTruth(qa.query_type),
                        Some(m) => QueryTypeSource::Classifier {
                            model: m,
                            k: config.k.min(m.registry.len()),
                        },
                    };
                    let out = stage("answering", answer(ctx, &qa.question, &qa.image_id, source))?;
                    let (answers, facts) = top_answers(
                        out.candidates
                            .iter()
                            .map(|c| (c.answer.as_str(), Some(&c.supporting_fact))),
                    );
                    let mut queried = Vec::new();
                    let mut seen = HashSet::new();
                    for q in &out.queries {
                        for f in &q.facts {
                            if seen.insert(f.key()) {
                                queried.push(f.clone());
                            }
                        }
                    }
                    trace.push(TraceRecord {
                        seed: config.seed,
                        split,
                        qid: qa.qid,
                        image_id: qa.image_id.clone(),
                        question: qa.question.clone(),
                        query_types: out
                            .queries
                            .iter()
                            .map(|q| TracedQueryType {
                                query_type: q.query_type,
                                probability: q.probability,
                            })
                            .collect(),
                        queried_facts: queried,
                        chosen_fact: out.best().map(|c| c.supporting_fact.clone()),
                        answer: out.best().map(|c| c.answer.clone()),
                        status: out.status,
                    });
                    predictions.insert(PredictionRecord {
                        split: Some(split),
                        question: qa.qid,
                        answers,
                        facts,
                        seed: Some(config.seed),
                    });
                }
            }
            Method::Frequent => {
                let b = stage("training", baseline_frequent(train.iter().map(|q| &q.answer)))?;
                let answers = b.predict(MAX_ANSWERS);
                for qa in test {
                    predictions.insert(PredictionRecord {
                        split: Some(split),
                        question: qa.qid,
                        answers: answers.clone(),
                        facts: Vec::new(),
                        seed: Some(config.seed),
                    });
                }
            }
            Method::LstmQuestion | Method::LstmQuestionImage | Method::LstmImage => {
                let uses_image = config.method != Method::LstmQuestion;
                let feats = match (&features, uses_image) {
                    (Some(f), true) => Some(f),
                    (None, true) => {
                        return Err(Error::Config("this method needs a features file".into()).in_stage("features ingest"))
                    }
                    _ => None,
                };
                let options = LstmBaselineOptions {
                    zero_question: config.method == Method::LstmImage,
                };
                let model = stage("training", baseline_lstm_answers(train, &config.training, feats, options))?;
                for qa in test {
                    let x = feats.map(|f| f.get(&qa.image_id)).unwrap_or_default();
                    let answers = stage("answering", model.predict(&qa.question, &x, MAX_ANSWERS))?;
                    predictions.insert(PredictionRecord {
                        split: Some(split),
                        question: qa.qid,
                        answers,
                        facts: Vec::new(),
                        seed: Some(config.seed),
                    });
                }
            }
        }
    }

    let name = match config.method {
        Method::Classifier => format!("classifier top-{}", config.k),
        m => m.name().to_string(),
    };
    let mut report = stage(
        "evaluation",
        evaluate(
            &name,
            &predictions,
            &inputs.dataset,
            inputs.taxonomy.as_ref(),
            &inputs.splits,
            inputs.human.as_ref(),
        ),
    )?;
    report.seed = Some(config.seed);
    Ok(PipelineOutput {
        report,
        predictions,
        trace,
    })
}

/// Write the report (JSON and text), predictions, trace and the run config.
pub fn write_outputs(config: &RunConfig, out: &PipelineOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    jsonl::write_json(&dir.join(REPORT_JSON), &out.report)?;
    let txt = dir.join(REPORT_TXT);
    std::fs::write(&txt, out.report.to_table()).map_err(|e| Error::io(&txt, e))?;
    out.predictions.save(&dir.join(PREDICTIONS_FILE))?;
    jsonl::write(&dir.join(TRACE_FILE), out.trace.iter())?;
    jsonl::write_json(&dir.join(RUN_FILE), config)?;
    Ok(())
}
