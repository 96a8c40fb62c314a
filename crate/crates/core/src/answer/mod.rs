//! Answering by querying the KB: keyword extraction, Jaccard matching of
//! facts against the question, and answer ranking.

mod engine;
mod keywords;

pub use engine::{
    answer, answer_from_image, answer_from_kb, AnswerCandidate, AnswerContext,
    AnswerFrequencyTable, AnswerOutcome, AnswerStatus, QueryRun, QueryTypeSource,
};
pub use keywords::{entity_keywords, extract_keywords, jaccard, stem, stopwords, KeywordSet};
