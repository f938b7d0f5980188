use serde::{Deserialize, Serialize};

use crate::corpus::Source;
use crate::reference::{ReferenceTable, Setting};

/// A measured accuracy (fraction) to be placed against a reference cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCell {
    pub model: String,
    pub dataset: Source,
    pub setting: Setting,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub model: String,
    pub dataset: Source,
    pub setting: Setting,
    pub measured: f64,
    /// Reference accuracy as a fraction.
    pub reference: f64,
    /// `measured - reference`.
    pub delta: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncoveredCell {
    pub model: String,
    pub dataset: Source,
    pub setting: Setting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub tolerance: f64,
    pub cells: Vec<DeltaCell>,
    /// Measured cells the table has no value for.
    pub uncovered: Vec<UncoveredCell>,
}

impl DeltaReport {
    pub fn all_within_tolerance(&self) -> bool {
        self.cells.iter().all(|c| c.within_tolerance)
    }
}

/// Reference values are stored in percent and compared as fractions.
pub fn compare_to_reference(measured: &[MeasuredCell], table: &ReferenceTable, tolerance: f64) -> DeltaReport {
    let mut cells = Vec::new();
    let mut uncovered = Vec::new();
    for m in measured {
        match table.accuracy(&m.model, m.dataset, m.setting) {
            Some(pct) => {
                let reference = pct / 100.0;
                let delta = m.accuracy - reference;
                cells.push(DeltaCell {
                    model: m.model.clone(),
                    dataset: m.dataset,
                    setting: m.setting,
                    measured: m.accuracy,
                    reference,
                    delta,
                    within_tolerance: delta.abs() <= tolerance,
                });
            }
            None => uncovered.push(UncoveredCell {
                model: m.model.clone(),
                dataset: m.dataset,
                setting: m.setting,
            }),
        }
    }
    DeltaReport {
        tolerance,
        cells,
        uncovered,
    }
}
