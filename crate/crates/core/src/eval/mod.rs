//! Accuracy runs over a labelled corpus, seed aggregation and comparison with
//! the reference table.

mod compare;
mod metrics;
mod report;
mod runner;

pub use compare::{compare_to_reference, DeltaCell, DeltaReport, MeasuredCell, UncoveredCell};
pub use metrics::{accuracy, aggregate_seeds, confusion, ConfusionMatrix, SeedStats};
pub use report::{AggregateReport, ReferenceValue, SeedAccuracy, SourceAggregate};
pub use runner::{
    backend_config, collect_predictions, evaluate, parse_seeds, EvalRun, Evaluation, Prediction, DEFAULT_SEEDS,
};

use thiserror::Error;

use crate::classifier::ClassifierError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate: {0}")]
    Empty(&'static str),
    #[error("prediction ids do not match the corpus ({missing} missing, {extra} unexpected, first: {example})")]
    IdMismatch {
        missing: usize,
        extra: usize,
        example: String,
    },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("classifying {pair_id}: {source}")]
    Classifier {
        pair_id: String,
        #[source]
        source: ClassifierError,
    },
    #[error("backend for seed {seed}: {source}")]
    Backend {
        seed: u64,
        #[source]
        source: ClassifierError,
    },
    #[error("invalid backend spec {spec:?}: {reason}")]
    BackendSpec { spec: String, reason: String },
    #[error("invalid seed list {0:?}")]
    Seeds(String),
}
