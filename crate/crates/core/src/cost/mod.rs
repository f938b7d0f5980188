//! FLOP estimates, the reference cost ledger and fine-tuning amortization.

mod flops;
mod ledger;

pub use flops::{
    amortization_note, breakeven_queries, estimate, finetune_flops_per_example, forward_flops,
    total_finetune_flops, AmortizationNote, CostEstimate, EncoderArchitecture, ModelCostProfile,
    FINETUNE_TO_FORWARD_RATIO, FORWARD_FLOPS_FORMULA,
};
pub use ledger::{
    check_consistency, ConsistencyFinding, ConsistencyStatus, CostLedger, CostLedgerEntry, Provenance,
    DEFAULT_RATIO_TOLERANCE,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("profile {name}: {field} must be positive")]
    NonPositive { name: String, field: &'static str },
    #[error("no breakeven: LLM inference ({llm}) must exceed encoder inference ({encoder})")]
    NoBreakeven { encoder: f64, llm: f64 },
    #[error("{0} must be a finite non-negative number")]
    InvalidAmount(&'static str),
    #[error("reference ledger lacks {0}")]
    MissingLedgerEntry(String),
}
