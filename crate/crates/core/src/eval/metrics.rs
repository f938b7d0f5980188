use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, Prediction};
use crate::corpus::{Label, QueryContextPair};

/// Pairs each gold record with its prediction, requiring identical id sets.
fn align<'a>(
    predictions: &'a [Prediction],
    gold: &'a [QueryContextPair],
) -> Result<Vec<(Label, Label)>, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::Empty("corpus is empty"));
    }
    let mut by_id = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.pair_id.as_str(), p.label).is_some() {
            return Err(EvalError::DuplicateId(p.pair_id.clone()));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    let mut missing = Vec::new();
    let mut aligned = Vec::with_capacity(gold.len());
    for g in gold {
        if !seen.insert(g.id.as_str()) {
            return Err(EvalError::DuplicateId(g.id.clone()));
        }
        match by_id.get(g.id.as_str()) {
            Some(&pred) => aligned.push((pred, g.label)),
            None => missing.push(g.id.as_str()),
        }
    }
    let extra: Vec<&str> = by_id.keys().copied().filter(|id| !seen.contains(id)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let example = missing
            .first()
            .copied()
            .or_else(|| extra.iter().min().copied())
            .unwrap_or_default()
            .to_string();
        return Err(EvalError::IdMismatch {
            missing: missing.len(),
            extra: extra.len(),
            example,
        });
    }
    Ok(aligned)
}

pub fn accuracy(predictions: &[Prediction], gold: &[QueryContextPair]) -> Result<f64, EvalError> {
    Ok(confusion(predictions, gold)?.accuracy())
}

/// Counts with grounded as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

pub fn confusion(predictions: &[Prediction], gold: &[QueryContextPair]) -> Result<ConfusionMatrix, EvalError> {
    let mut m = ConfusionMatrix::default();
    for (pred, truth) in align(predictions, gold)? {
        match (pred, truth) {
            (Label::Grounded, Label::Grounded) => m.tp += 1,
            (Label::Ungrounded, Label::Ungrounded) => m.tn += 1,
            (Label::Grounded, Label::Ungrounded) => m.fp += 1,
            (Label::Ungrounded, Label::Grounded) => m.fn_ += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
}

pub fn aggregate_seeds(accuracies: &[f64]) -> Result<SeedStats, EvalError> {
    if accuracies.is_empty() {
        return Err(EvalError::Empty("no seed accuracies"));
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    if accuracies.len() == 1 {
        return Ok(SeedStats { mean, std: 0.0 });
    }
    let ss: f64 = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok(SeedStats {
        mean,
        std: (ss / (n - 1.0)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, Split};

    fn gold(labels: &[Label]) -> Vec<QueryContextPair> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| QueryContextPair::new(format!("p{i}"), "q", "c", l, Source::Synthetic, Split::Test).unwrap())
            .collect()
    }

    fn preds(labels: &[Label]) -> Vec<Prediction> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Prediction {
                pair_id: format!("p{i}"),
                label: l,
            })
            .collect()
    }

    use Label::{Grounded as G, Ungrounded as U};

    #[test]
    fn perfect_and_partial_accuracy() {
        let g = gold(&[G, U, G, U]);
        assert_eq!(accuracy(&preds(&[G, U, G, U]), &g).unwrap(), 1.0);
        assert_eq!(accuracy(&preds(&[G, U, G, G]), &g).unwrap(), 0.75);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(accuracy(&[], &[]), Err(EvalError::Empty(_))));
    }

    #[test]
    fn mismatched_ids_are_errors() {
        let g = gold(&[G, U]);
        let mut p = preds(&[G, U]);
        p[1].pair_id = "other".into();
        assert!(matches!(
            accuracy(&p, &g),
            Err(EvalError::IdMismatch { missing: 1, extra: 1, .. })
        ));
        assert!(matches!(accuracy(&preds(&[G]), &g), Err(EvalError::IdMismatch { .. })));
        let mut dup = preds(&[G, U]);
        dup.push(dup[0].clone());
        assert!(matches!(accuracy(&dup, &g), Err(EvalError::DuplicateId(_))));
    }

    #[test]
    fn confusion_cases() {
        let g = gold(&[G, G, U, U, U]);
        let all_g = confusion(&preds(&[G, G, U, U, U]), &g).unwrap();
        assert_eq!(all_g.fn_, 0);
        let inverted = confusion(&preds(&[U, U, G, G, G]), &g).unwrap();
        assert_eq!((inverted.tp, inverted.tn), (0, 0));
        assert_eq!(inverted.total(), 5);
        let mixed = confusion(&preds(&[G, U, G, U, U]), &g).unwrap();
        assert_eq!(mixed, ConfusionMatrix { tp: 1, tn: 2, fp: 1, fn_: 1 });
        assert_eq!(mixed.accuracy(), accuracy(&preds(&[G, U, G, U, U]), &g).unwrap());
        assert_eq!(serde_json::to_string(&mixed).unwrap(), r#"{"tp":1,"tn":2,"fp":1,"fn":1}"#);
    }

    #[test]
    fn seed_aggregation_conventions() {
        let s = aggregate_seeds(&[0.9, 0.9, 0.9]).unwrap();
        assert!((s.mean - 0.9).abs() < 1e-15 && s.std < 1e-15);
        assert_eq!(aggregate_seeds(&[0.7]).unwrap(), SeedStats { mean: 0.7, std: 0.0 });
        assert!(aggregate_seeds(&[]).is_err());
        // deviations -0.01..0.02, squares sum to 0.001, /4 then sqrt
        let s = aggregate_seeds(&[0.90, 0.91, 0.92, 0.89, 0.93]).unwrap();
        assert!((s.mean - 0.91).abs() < 1e-12);
        assert!((s.std - 0.00025f64.sqrt()).abs() < 1e-12);
    }
}
