use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{Example, LstmParameters, LstmShape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain minibatch SGD: `θ ← θ - lr·g`.
    Sgd,
    /// Minibatch SGD with Adam moment estimates (β₁ = 0.9, β₂ = 0.999).
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Bound on the global L2 norm of each minibatch gradient.
    pub clip: f64,
    /// Dropout rate on the final hidden state during training.
    pub dropout: f64,
    pub epochs: usize,
    /// Weight `λ` of the `λ‖θ‖²` penalty.
    pub l2: f64,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 100,
            learning_rate: 0.001,
            clip: 10.0,
            dropout: 0.5,
            epochs: 50,
            l2: 1e-6,
            seed: 1,
            embed_dim: 128,
            hidden_dim: 128,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 || self.epochs == 0 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("batch_size, epochs and dimensions must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return bad("clip must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: LstmParameters,
    /// Mean minibatch loss of every epoch (dropout active).
    pub loss_curve: Vec<f64>,
}

/// Train a fresh model of the given shape. The generator seeded with
/// `config.seed` drives initialization, per-epoch shuffling and dropout, so
/// the same inputs always produce bitwise-identical parameters.
pub fn train(examples: &[Example], shape: LstmShape, config: &TrainingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Config("no training examples".into()));
    }
    if let Some(ex) = examples.iter().find(|e| e.label >= shape.classes) {
        return Err(Error::UnknownLabel(format!("class {} of {}", ex.label, shape.classes)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = LstmParameters::init(shape, &mut rng);
    let mut state = OptimizerState::new(config.optimizer, &params);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, mut grad) =
                params.loss_and_grad(&batch, config.l2, Some((&mut rng, config.dropout)))?;
            clip_global_norm(&mut grad, config.clip);
            state.step(&mut params, &grad, config.learning_rate);
            total += loss * chunk.len() as f64;
        }
        let mean = total / examples.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Invariant("training loss is not finite".into()));
        }
        loss_curve.push(mean);
    }
    Ok(TrainOutcome { params, loss_curve })
}

/// Rescale `grad` so its global L2 norm is at most `bound`. Returns the norm
/// before clipping.
pub fn clip_global_norm(grad: &mut LstmParameters, bound: f64) -> f64 {
    let norm = grad.squared_norm().sqrt();
    if norm > bound {
        let scale = bound / norm;
        for block in grad.blocks_mut() {
            block.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

enum OptimizerState {
    Sgd,
    Adam {
        t: i32,
        m: Box<LstmParameters>,
        v: Box<LstmParameters>,
    },
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

impl OptimizerState {
    fn new(kind: Optimizer, params: &LstmParameters) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam {
                t: 0,
                m: Box::new(LstmParameters::zeros(params.shape)),
                v: Box::new(LstmParameters::zeros(params.shape)),
            },
        }
    }

    fn step(&mut self, params: &mut LstmParameters, grad: &LstmParameters, lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (p, (_, g)) in params.blocks_mut().into_iter().zip(grad.blocks()) {
                    p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
                }
            }
            OptimizerState::Adam { t, m, v } => {
                *t += 1;
                let c1 = 1.0 - BETA1.powi(*t);
                let c2 = 1.0 - BETA2.powi(*t);
                let blocks = params
                    .blocks_mut()
                    .into_iter()
                    .zip(grad.blocks())
                    .zip(m.blocks_mut().into_iter().zip(v.blocks_mut()));
                for ((p, (_, g)), (m, v)) in blocks {
                    for k in 0..p.len() {
                        m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                        v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                        p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPSILON);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_examples() -> Vec<Example> {
        // Class is decided by which of tokens 2/3/4 appears.
        let mut out = Vec::new();
        for i in 0..30 {
            let marker = 2 + i % 3;
            let filler = 5 + (i / 3) % 3;
            out.push(Example::new(vec![1, filler, marker, filler], i % 3));
        }
        out
    }

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            batch_size: 10,
            learning_rate: 0.01,
            epochs: 30,
            embed_dim: 8,
            hidden_dim: 8,
            dropout: 0.1,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let c = TrainingConfig::default();
        assert_eq!(c.batch_size, 100);
        assert_eq!(c.embed_dim, 128);
        assert_eq!(c.hidden_dim, 128);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.clip, 10.0);
        assert_eq!(c.dropout, 0.5);
        assert_eq!(c.epochs, 50);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_validation() {
        for bad in [
            TrainingConfig { dropout: 1.0, ..Default::default() },
            TrainingConfig { batch_size: 0, ..Default::default() },
            TrainingConfig { learning_rate: 0.0, ..Default::default() },
            TrainingConfig { clip: -1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn loss_decreases_and_is_deterministic() {
        let examples = toy_examples();
        let shape = LstmShape::new(8, 8, 8, 3);
        let a = train(&examples, shape, &small_config()).unwrap();
        assert!(a.loss_curve.last().unwrap() < a.loss_curve.first().unwrap());
        let b = train(&examples, shape, &small_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plain_sgd_runs() {
        let examples = toy_examples();
        let shape = LstmShape::new(8, 8, 8, 3);
        let config = TrainingConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 1.0,
            epochs: 200,
            ..small_config()
        };
        let out = train(&examples, shape, &config).unwrap();
        assert!(out.loss_curve.last().unwrap() < out.loss_curve.first().unwrap());
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let examples = vec![Example::new(vec![1, 2], 5)];
        let err = train(&examples, LstmShape::new(8, 4, 4, 3), &small_config());
        assert!(matches!(err, Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut g = LstmParameters::zeros(LstmShape::new(3, 2, 2, 2));
        g.b_p = vec![30.0, 40.0];
        assert_eq!(clip_global_norm(&mut g, 10.0), 50.0);
        assert!((g.squared_norm().sqrt() - 10.0).abs() < 1e-12);
    }
}
