//! Runs the guide's code listings as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/triple-store.md")]
pub mod triple_store {}
#[doc = include_str!("../../../book/src/visual-concepts.md")]
pub mod visual_concepts {}
#[doc = include_str!("../../../book/src/query-types.md")]
pub mod query_types {}
#[doc = include_str!("../../../book/src/answering.md")]
pub mod answering {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
