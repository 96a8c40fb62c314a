//! Question to query-type mapping: tokenizer, vocabulary, LSTM classifier
//! and its trainer.

mod classifier;
mod lstm;
mod matrix;
mod query_type;
mod tokenize;
mod train;
mod vocab;

pub use classifier::{rank_top_k, QqClassifier, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use lstm::{
    log_softmax, lstm_step, softmax, Example, LstmParameters, LstmShape, LstmState, FORGET_BIAS,
    INIT_RANGE,
};
pub use matrix::Matrix;
pub use query_type::{AnswerSource, QueryRegistry, QueryType, REFERENCE_QUERY_TYPES};
pub use tokenize::tokenize;
pub use train::{clip_global_norm, train, Optimizer, TrainOutcome, TrainingConfig};
pub use vocab::{Vocabulary, START, UNK};
