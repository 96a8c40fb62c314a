use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::answer::AnswerFrequencyTable;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::qq::{rank_top_k, train, tokenize, Example, LstmParameters, LstmShape, TrainingConfig, Vocabulary};

use super::dataset::QAInstance;

/// Size of the answer space of the classification baseline.
pub const ANSWER_SPACE: usize = 500;

/// Predicts the most frequent training answers for every question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequentBaseline {
    pub answers: Vec<String>,
}

impl FrequentBaseline {
    pub fn predict(&self, k: usize) -> Vec<String> {
        self.answers.iter().take(k).cloned().collect()
    }
}

/// ```
/// use factqa::eval::baseline_frequent;
/// let b = baseline_frequent(["cat", "dog", "Cats", "cat"]).unwrap();
/// assert_eq!(b.answers, ["cat", "dog"]);
/// ```
pub fn baseline_frequent<S: AsRef<str>>(train_answers: impl IntoIterator<Item = S>) -> Result<FrequentBaseline> {
    let table = AnswerFrequencyTable::from_answers(train_answers);
    if table.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    Ok(FrequentBaseline {
        answers: table.ranked().into_iter().map(|(a, _)| a.to_string()).collect(),
    })
}

/// Per-image feature vectors of one fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    by_image: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureRecord {
    image_id: String,
    features: Vec<f64>,
}

impl FeatureTable {
    /// An empty table of dimension `dim`: every image gets zeros.
    pub fn zeros(dim: usize) -> Self {
        FeatureTable {
            dim,
            by_image: HashMap::new(),
        }
    }

    pub fn insert(&mut self, image_id: &str, features: Vec<f64>) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::FeatureDimension {
                image_id: image_id.to_string(),
                expected: self.dim,
                found: features.len(),
            });
        }
        self.by_image.insert(image_id.to_string(), features);
        Ok(())
    }

    /// Read `{"image_id", "features"}` lines. The dimension is taken from
    /// `expected`, or from the first record when `None`.
    pub fn load(path: &Path, expected: Option<usize>) -> Result<Self> {
        let records = jsonl::read_strict::<FeatureRecord>(path)?;
        let dim = expected
            .or_else(|| records.first().map(|(_, r)| r.features.len()))
            .unwrap_or(0);
        let mut table = FeatureTable::zeros(dim);
        for (_, r) in records {
            table.insert(&r.image_id, r.features)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Features of an image, zeros when absent.
    pub fn get(&self, image_id: &str) -> Vec<f64> {
        self.by_image
            .get(image_id)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim])
    }
}

/// Options of the answer-classification baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LstmBaselineOptions {
    /// Zero every question input (image-only ablation).
    pub zero_question: bool,
}

/// Question (+ image features) classifier over the most frequent answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmAnswerBaseline {
    pub vocabulary: Vocabulary,
    pub answers: Vec<String>,
    pub params: LstmParameters,
    pub loss_curve: Vec<f64>,
}

/// Train the answer classifier on a training split. The answer space is the
/// `min(500, distinct)` most frequent normalized answers; questions whose
/// answer falls outside it are not used for training.
pub fn baseline_lstm_answers(
    train_set: &[&QAInstance],
    config: &TrainingConfig,
    features: Option<&FeatureTable>,
    options: LstmBaselineOptions,
) -> Result<LstmAnswerBaseline> {
    config.validate()?;
    let table = AnswerFrequencyTable::from_answers(train_set.iter().map(|q| &q.answer));
    if table.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let answers: Vec<String> = table
        .ranked()
        .into_iter()
        .take(ANSWER_SPACE)
        .map(|(a, _)| a.to_string())
        .collect();
    let index: HashMap<&str, usize> = answers.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let tokens: Vec<Vec<String>> = train_set.iter().map(|q| tokenize(&q.question)).collect();
    let vocabulary = Vocabulary::build(tokens.iter().map(Vec::as_slice));
    let dim = features.map_or(0, FeatureTable::dim);
    let examples: Vec<Example> = train_set
        .iter()
        .zip(&tokens)
        .filter_map(|(q, t)| {
            let label = *index.get(crate::eval::normalize_answer(&q.answer).as_str())?;
            Some(Example {
                ids: vocabulary.encode(t),
                features: features.map(|f| f.get(&q.image_id)).unwrap_or_default(),
                label,
            })
        })
        .collect();
    let mut shape = LstmShape::new(vocabulary.len(), config.embed_dim, config.hidden_dim, answers.len())
        .with_features(dim);
    shape.zero_question = options.zero_question;
    let outcome = train(&examples, shape, config)?;
    Ok(LstmAnswerBaseline {
        vocabulary,
        answers,
        params: outcome.params,
        loss_curve: outcome.loss_curve,
    })
}

impl LstmAnswerBaseline {
    /// Answer probabilities in answer-space order.
    pub fn probabilities(&self, question: &str, features: &[f64]) -> Result<Vec<f64>> {
        let ids = self.vocabulary.encode(&tokenize(question));
        self.params.forward(&ids, features)
    }

    pub fn predict(&self, question: &str, features: &[f64], k: usize) -> Result<Vec<String>> {
        let p = self.probabilities(question, features)?;
        Ok(rank_top_k(&p, k.min(p.len()))
            .into_iter()
            .map(|i| self.answers[i].clone())
            .collect())
    }
}
