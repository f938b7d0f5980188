//! Groundedness gating for retrieval-augmented generation.
//!
//! A query is only forwarded to an expensive LLM when a cheap classifier
//! decides the supplied context can answer it. The crate is split into:
//!
//! - [`corpus`]: canonical (query, context, label) records and dataset adapters
//!   for SQuAD v2, NewsQA and BEIR-style IR collections.
//! - [`classifier`]: a uniform classify contract over a remote encoder endpoint,
//!   an embedded ONNX model and a lexical-overlap baseline.
//! - [`judge`]: zero-shot yes/no judging through chat-completion endpoints with a
//!   fixed 40-template prompt bank.
//! - [`gateway`]: the abstain-or-forward service, with caching and savings metrics.
//! - [`eval`]: seeded accuracy runs, aggregation and reference-table comparison.
//! - [`cost`]: FLOP estimates, the reference cost ledger and breakeven analysis.

pub mod classifier;
pub mod corpus;
pub mod cost;
pub mod eval;
pub mod gateway;
pub mod judge;
pub mod reference;

pub use classifier::{GroundednessClassifier, GroundednessVerdict};
pub use corpus::{Label, QueryContextPair, Source, Split};
