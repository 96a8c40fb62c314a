//! Evaluation protocol: answer normalization, taxonomy similarity, Top-k and
//! WUPS metrics, seeded splits, reports and baselines.

mod baselines;
mod dataset;
mod metrics;
mod normalize;
mod report;
mod splits;
mod taxonomy;

pub use baselines::{
    baseline_frequent, baseline_lstm_answers, FeatureTable, FrequentBaseline, LstmAnswerBaseline,
    LstmBaselineOptions, ANSWER_SPACE,
};
pub use dataset::{
    ingest_dataset, ingest_dataset_reader, DatasetIngest, PredictionRecord, Predictions, QAInstance,
};
pub use metrics::{apply_threshold, fact_accuracy, topk_accuracy, wups_score, wups_similarity};
pub use normalize::{irregular_plurals, normalize_answer, singularize};
pub use report::{
    evaluate, test_questions, AtK, Breakdown, EvalReport, Group, MeanStd, Metrics, Scored,
    SplitReport, CUTOFFS,
};
pub use splits::{make_splits, train_size, Split, SplitSpec};
pub use taxonomy::{wup, TaxonomyTree};
