use serde::{Deserialize, Serialize};

use super::flops::{finetune_flops_per_example, forward_flops, FINETUNE_TO_FORWARD_RATIO};
use super::{CostError, ModelCostProfile};
use crate::reference::ReferenceTable;

pub const DEFAULT_RATIO_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reference,
    Estimated,
}

/// FLOPs for one model. `None` marks a value the source leaves blank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedgerEntry {
    pub model: String,
    pub ft_flops: Option<f64>,
    pub inference_flops: Option<f64>,
    pub provenance: Provenance,
}

impl CostLedgerEntry {
    pub fn estimated(profile: &ModelCostProfile) -> Result<Self, CostError> {
        Ok(CostLedgerEntry {
            model: profile.name.clone(),
            ft_flops: Some(finetune_flops_per_example(profile)?),
            inference_flops: Some(forward_flops(profile)?),
            provenance: Provenance::Estimated,
        })
    }

    pub fn ratio(&self) -> Option<f64> {
        match (self.ft_flops, self.inference_flops) {
            (Some(ft), Some(inf)) if inf > 0.0 => Some(ft / inf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<CostLedgerEntry>,
}

impl CostLedger {
    /// Reference FLOPs copied verbatim, tagged with their provenance.
    pub fn from_reference(table: &ReferenceTable) -> Self {
        CostLedger {
            entries: table
                .models
                .iter()
                .map(|m| CostLedgerEntry {
                    model: m.name.clone(),
                    ft_flops: m.flops.fine_tune,
                    inference_flops: m.flops.inference,
                    provenance: Provenance::Reference,
                })
                .collect(),
        }
    }

    pub fn bundled() -> Self {
        Self::from_reference(&ReferenceTable::bundled())
    }

    pub fn entry(&self, model: &str) -> Option<&CostLedgerEntry> {
        self.entries.iter().find(|e| e.model == model)
    }

    /// Adds an estimate; reference entries for the same model stay in place.
    pub fn push_estimate(&mut self, entry: CostLedgerEntry) {
        debug_assert_eq!(entry.provenance, Provenance::Estimated);
        self.entries.push(entry);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyStatus {
    Consistent,
    OffModel,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyFinding {
    pub model: String,
    pub provenance: Provenance,
    pub ratio: Option<f64>,
    pub status: ConsistencyStatus,
}

/// Compares each entry's fine-tune/inference ratio with the forward+backward
/// rule; entries more than `tolerance` (relative) away are off-model. The
/// ledger itself is never modified.
pub fn check_consistency(ledger: &CostLedger, tolerance: f64) -> Vec<ConsistencyFinding> {
    ledger
        .entries
        .iter()
        .map(|e| {
            let ratio = e.ratio();
            let status = match ratio {
                None => ConsistencyStatus::Unknown,
                Some(r) if ((r - FINETUNE_TO_FORWARD_RATIO) / FINETUNE_TO_FORWARD_RATIO).abs() <= tolerance => {
                    ConsistencyStatus::Consistent
                }
                Some(_) => ConsistencyStatus::OffModel,
            };
            ConsistencyFinding {
                model: e.model.clone(),
                provenance: e.provenance,
                ratio,
                status,
            }
        })
        .collect()
}
