//! Published reference results: accuracy and FLOPs cells per model.
//!
//! The table ships as a versioned JSON data file and is used only for
//! comparison; nothing in the crate treats it as ground truth for our models.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Source;

const BUNDLED: &str = include_str!("../data/reference_table.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Encoder,
    OpenLlm,
    ClosedLlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    ZeroShot,
    FineTuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Accuracy cells in percent; `None` where the table has no entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub zero_shot: Option<f64>,
    pub fine_tuned: Option<MeanStd>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopsCell {
    pub fine_tune: Option<f64>,
    pub inference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub name: String,
    pub family: ModelFamily,
    pub accuracy: BTreeMap<Source, AccuracyCell>,
    pub flops: FlopsCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub version: String,
    pub provenance: String,
    pub accuracy_unit: String,
    pub models: Vec<ReferenceModel>,
}

impl ReferenceTable {
    /// The table compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled reference table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::other)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reference table serializes")
    }

    pub fn model(&self, name: &str) -> Option<&ReferenceModel> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Accuracy in percent for one cell, if present.
    pub fn accuracy(&self, model: &str, dataset: Source, setting: Setting) -> Option<f64> {
        let cell = self.model(model)?.accuracy.get(&dataset)?;
        match setting {
            Setting::ZeroShot => cell.zero_shot,
            Setting::FineTuned => cell.fine_tuned.map(|c| c.mean),
        }
    }
}
