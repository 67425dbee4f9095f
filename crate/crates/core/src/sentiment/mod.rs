//! Per-post sentiment labels and their daily aggregation.
//!
//! Labels come either from the built-in hashed n-gram logistic classifier
//! or from a JSONL label file written by an external scorer.

mod aggregate;
mod classifier;
mod features;
mod labels;

pub use aggregate::{
    daily_aggregate, load_daily_series, write_daily_series, AggregateMode, DailySentiment,
    DailySentimentSeries, JoinReport,
};
pub use classifier::{
    load_corpus, train_classifier, ClassifierHyper, SentimentModel, TrainedClassifier,
};
pub use features::{featurize, SparseVector, DEFAULT_HASH_DIMS, DEFAULT_NGRAM_ORDERS};
pub use labels::{ingest_labels, write_labels, SentimentLabel, DECISION_THRESHOLD};
