use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::compare::{compare_to_reference, DeltaReport, MeasuredCell};
use super::metrics::{aggregate_seeds, confusion, ConfusionMatrix};
use super::{EvalError, EvalRun, Prediction};
use crate::corpus::{QueryContextPair, Source};
use crate::reference::{ReferenceTable, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedAccuracy {
    pub seed: u64,
    pub accuracy: f64,
}

/// Accuracy restricted to one dataset of a mixed corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAggregate {
    pub source: Source,
    pub pairs: usize,
    pub per_seed: Vec<SeedAccuracy>,
    pub mean: f64,
    pub std: f64,
    pub confusion: ConfusionMatrix,
}

/// Reference model and setting the report was compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub model: String,
    pub setting: Setting,
    pub comparison: DeltaReport,
}

/// Seed aggregate for one backend over one corpus. Holds no timings, so the
/// serialized form depends on the inputs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub corpus_id: String,
    pub backend_id: String,
    pub pairs: usize,
    pub per_seed: Vec<SeedAccuracy>,
    pub mean: f64,
    /// Sample standard deviation (n - 1).
    pub std: f64,
    /// Summed over seeds.
    pub confusion: ConfusionMatrix,
    pub per_source: Vec<SourceAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceValue>,
}

fn restrict(predictions: &[Prediction], ids: &BTreeMap<&str, ()>) -> Vec<Prediction> {
    predictions
        .iter()
        .filter(|p| ids.contains_key(p.pair_id.as_str()))
        .cloned()
        .collect()
}

impl AggregateReport {
    pub fn from_runs(corpus_id: &str, corpus: &[QueryContextPair], runs: &[EvalRun]) -> Result<Self, EvalError> {
        if runs.is_empty() {
            return Err(EvalError::Empty("no runs"));
        }
        let per_seed: Vec<SeedAccuracy> = runs
            .iter()
            .map(|r| SeedAccuracy {
                seed: r.seed,
                accuracy: r.accuracy,
            })
            .collect();
        let stats = aggregate_seeds(&per_seed.iter().map(|s| s.accuracy).collect::<Vec<_>>())?;
        let mut total = ConfusionMatrix::default();
        for r in runs {
            total.add(&r.confusion);
        }

        let mut by_source: BTreeMap<Source, Vec<QueryContextPair>> = BTreeMap::new();
        for p in corpus {
            by_source.entry(p.source).or_default().push(p.clone());
        }
        let mut per_source = Vec::new();
        for (source, gold) in by_source {
            let ids: BTreeMap<&str, ()> = gold.iter().map(|p| (p.id.as_str(), ())).collect();
            let mut seeds = Vec::new();
            let mut cm_total = ConfusionMatrix::default();
            for r in runs {
                let cm = confusion(&restrict(&r.predictions, &ids), &gold)?;
                cm_total.add(&cm);
                seeds.push(SeedAccuracy {
                    seed: r.seed,
                    accuracy: cm.accuracy(),
                });
            }
            let s = aggregate_seeds(&seeds.iter().map(|s| s.accuracy).collect::<Vec<_>>())?;
            per_source.push(SourceAggregate {
                source,
                pairs: gold.len(),
                per_seed: seeds,
                mean: s.mean,
                std: s.std,
                confusion: cm_total,
            });
        }

        Ok(AggregateReport {
            corpus_id: corpus_id.to_string(),
            backend_id: runs[0].backend_id.clone(),
            pairs: corpus.len(),
            per_seed,
            mean: stats.mean,
            std: stats.std,
            confusion: total,
            per_source,
            reference: None,
        })
    }

    /// Attaches a per-dataset comparison against `model` in the table.
    pub fn compare_with(&mut self, table: &ReferenceTable, model: &str, setting: Setting, tolerance: f64) {
        let measured: Vec<MeasuredCell> = self
            .per_source
            .iter()
            .map(|s| MeasuredCell {
                model: model.to_string(),
                dataset: s.source,
                setting,
                accuracy: s.mean,
            })
            .collect();
        self.reference = Some(ReferenceValue {
            model: model.to_string(),
            setting,
            comparison: compare_to_reference(&measured, table, tolerance),
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let pct = |x: f64| format!("{:.2}", 100.0 * x);
        let _ = writeln!(md, "# Evaluation: {} on {}\n", self.backend_id, self.corpus_id);
        let _ = writeln!(
            md,
            "{} pairs, {} seeds. Accuracy {} ± {} (sample std).\n",
            self.pairs,
            self.per_seed.len(),
            pct(self.mean),
            pct(self.std)
        );
        md.push_str("| seed | accuracy |\n|---:|---:|\n");
        for s in &self.per_seed {
            let _ = writeln!(md, "| {} | {} |", s.seed, pct(s.accuracy));
        }
        md.push_str("\n| dataset | pairs | mean | std | TP | TN | FP | FN |\n|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for s in &self.per_source {
            let c = &s.confusion;
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                s.source,
                s.pairs,
                pct(s.mean),
                pct(s.std),
                c.tp,
                c.tn,
                c.fp,
                c.fn_
            );
        }
        if let Some(r) = &self.reference {
            let _ = writeln!(
                md,
                "\nReference: {} ({}), tolerance {} points.\n",
                r.model,
                serde_json::to_value(r.setting).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                pct(r.comparison.tolerance)
            );
            md.push_str("| dataset | measured | reference | delta | ok |\n|---|---:|---:|---:|---|\n");
            for c in &r.comparison.cells {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {:+.2} | {} |",
                    c.dataset,
                    pct(c.measured),
                    pct(c.reference),
                    100.0 * c.delta,
                    if c.within_tolerance { "yes" } else { "no" }
                );
            }
            for u in &r.comparison.uncovered {
                let _ = writeln!(md, "| {} | uncovered | | | |", u.dataset);
            }
        }
        md
    }
}
