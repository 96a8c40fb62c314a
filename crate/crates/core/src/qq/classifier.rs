use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::{Example, LstmParameters, LstmShape};
use super::query_type::{QueryRegistry, QueryType};
use super::tokenize::tokenize;
use super::train::{train, TrainingConfig};
use super::vocab::Vocabulary;
use crate::answer::AnswerFrequencyTable;
use crate::error::{Error, Result};
use crate::jsonl;

pub const CHECKPOINT_FORMAT: &str = "factqa-query-classifier";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained question to query-type classifier together with everything
/// needed to use it: vocabulary, label registry, training metadata and the
/// answer frequencies of its training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqClassifier {
    pub format: String,
    pub version: u32,
    pub config: TrainingConfig,
    pub vocabulary: Vocabulary,
    pub registry: QueryRegistry,
    pub params: LstmParameters,
    pub loss_curve: Vec<f64>,
    #[serde(default)]
    pub answer_frequencies: AnswerFrequencyTable,
}

impl QqClassifier {
    /// Train on `(question, query type)` pairs. Every label must already be in
    /// `registry`; this is checked before any training happens.
    pub fn train<S: AsRef<str>>(
        data: &[(S, QueryType)],
        registry: QueryRegistry,
        config: &TrainingConfig,
    ) -> Result<Self> {
        config.validate()?;
        let labels = data
            .iter()
            .map(|(_, qt)| registry.require(qt))
            .collect::<Result<Vec<_>>>()?;
        let tokens: Vec<Vec<String>> = data.iter().map(|(q, _)| tokenize(q.as_ref())).collect();
        let vocabulary = Vocabulary::build(tokens.iter().map(Vec::as_slice));
        let examples: Vec<Example> = tokens
            .iter()
            .zip(labels)
            .map(|(t, label)| Example::new(vocabulary.encode(t), label))
            .collect();
        let shape = LstmShape::new(vocabulary.len(), config.embed_dim, config.hidden_dim, registry.len());
        let outcome = train(&examples, shape, config)?;
        Ok(QqClassifier {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            vocabulary,
            registry,
            params: outcome.params,
            loss_curve: outcome.loss_curve,
            answer_frequencies: AnswerFrequencyTable::default(),
        })
    }

    pub fn with_answer_frequencies(mut self, table: AnswerFrequencyTable) -> Self {
        self.answer_frequencies = table;
        self
    }

    /// Probability of every registered query type, in registry order.
    pub fn probabilities(&self, question: &str) -> Result<Vec<f64>> {
        let ids = self.vocabulary.encode(&tokenize(question));
        self.params.forward(&ids, &[])
    }

    /// The `k` most probable query types, most probable first; equal
    /// probabilities keep registry order.
    pub fn predict_topk(&self, question: &str, k: usize) -> Result<Vec<(QueryType, f64)>> {
        if k == 0 || k > self.registry.len() {
            return Err(Error::Invalid(format!(
                "k = {k} outside 1..={}",
                self.registry.len()
            )));
        }
        let probs = self.probabilities(question)?;
        Ok(rank_top_k(&probs, k)
            .into_iter()
            .map(|i| (self.registry.types()[i], probs[i]))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: QqClassifier = jsonl::read_json(path)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.params.validate()?;
        if ckpt.params.shape.vocab != ckpt.vocabulary.len()
            || ckpt.params.shape.classes != ckpt.registry.len()
        {
            return Err(Error::Checkpoint(
                "vocabulary or registry size disagrees with parameter shapes".into(),
            ));
        }
        Ok(ckpt)
    }
}

/// Indices of the `k` largest values, largest first, ties by lower index.
pub fn rank_top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::VisualConceptKind::*;
    use crate::kb::PredicateKind::*;
    use crate::qq::query_type::AnswerSource::*;

    fn data() -> Vec<(String, QueryType)> {
        let capable = QueryType::new(CapableOf, Object, Image);
        let used = QueryType::new(UsedFor, Scene, KB);
        let mut out = Vec::new();
        for i in 0..12 {
            out.push((format!("which object can do thing {i}"), capable));
            out.push((format!("what is this place used for {i}"), used));
        }
        out
    }

    fn config() -> TrainingConfig {
        TrainingConfig {
            batch_size: 8,
            learning_rate: 0.02,
            epochs: 20,
            embed_dim: 6,
            hidden_dim: 6,
            dropout: 0.0,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn label_outside_registry_fails_before_training() {
        let registry = QueryRegistry::from_types([QueryType::new(CapableOf, Object, Image)]);
        let err = QqClassifier::train(&data(), registry, &config());
        assert!(matches!(err, Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn learns_and_round_trips() {
        let d = data();
        let registry = QueryRegistry::from_types(d.iter().map(|(_, q)| *q));
        let clf = QqClassifier::train(&d, registry, &config()).unwrap();
        let top = clf.predict_topk("what is this place used for", 1).unwrap();
        assert_eq!(top[0].0, QueryType::new(UsedFor, Scene, KB));

        let full = clf.predict_topk("which object can do it", 2).unwrap();
        assert_eq!(full.len(), 2);
        assert!(full[0].1 >= full[1].1);
        assert!(clf.predict_topk("x", 0).is_err());
        assert!(clf.predict_topk("x", 3).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        clf.save(&path).unwrap();
        let back = QqClassifier::load(&path).unwrap();
        assert_eq!(back, clf);
        for q in ["which object can climb", "unseen words only", ""] {
            assert_eq!(back.probabilities(q).unwrap(), clf.probabilities(q).unwrap());
        }
    }

    #[test]
    fn ties_keep_registry_order() {
        assert_eq!(rank_top_k(&[0.25, 0.25, 0.25, 0.25], 2), [0, 1]);
        assert_eq!(rank_top_k(&[0.1, 0.5, 0.4], 3), [1, 2, 0]);
    }
}
