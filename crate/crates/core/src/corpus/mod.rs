//! Canonical groundedness corpus and the dataset adapters that produce it.

mod beir;
mod io;
mod newsqa;
mod pair;
mod split;
mod squad;
pub mod synthetic;

pub use beir::{
    build_ir_pairs, load_beir_corpus, load_beir_queries, load_qrels, parse_beir, BeirDocument,
    DatasetDescriptor, Qrel, SamplingParams, DEFAULT_NEGATIVE_RATIO, DEFAULT_RELEVANCE_THRESHOLD,
};
pub use io::{read_pairs, read_pairs_from, write_pairs, write_pairs_to};
pub use newsqa::{parse_newsqa, NewsQaParse, SkipReport, SkippedRecord};
pub use pair::{normalize_text, Label, QueryContextPair, Source, Split};
pub use split::{stratified_split, SplitCorpus, SplitRatios};
pub use squad::parse_squad_v2;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("pair {id}: query is empty after whitespace normalization")]
    EmptyQuery { id: String },
    #[error("pair {id}: context is empty after whitespace normalization")]
    EmptyContext { id: String },
    #[error("pair id must not be empty")]
    EmptyId,
    #[error("duplicate pair id {id}")]
    DuplicateId { id: String },
    #[error("malformed dataset document: {0}")]
    MalformedDocument(String),
    #[error("question {question_id}: {reason}")]
    MalformedQuestion { question_id: String, reason: String },
    #[error("question {question_id} has no is_impossible flag")]
    MissingImpossibleFlag { question_id: String },
    #[error("line {line}: invalid label token {token:?}")]
    InvalidLabel { line: usize, token: String },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("qrels reference unknown ids: {}", .orphans.join(", "))]
    OrphanQrels { orphans: Vec<String> },
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
