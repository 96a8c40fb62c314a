//! Fact-based visual question answering.
//!
//! Questions about an image are mapped to a knowledge-base query type by a
//! small LSTM classifier, the query is run over the image's visual concepts
//! and a triple store, and the fact whose words best match the question
//! supplies the answer.

pub mod answer;
pub mod concepts;
pub mod config;
pub mod entity;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod kb;
pub mod pipeline;
pub mod qq;
pub mod synth;

pub use entity::{canonicalize, EntityId};
pub use error::{Error, RecordError, Result};
