use std::sync::Arc;

use futures::stream::{self, StreamExt, TryStreamExt};
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, ConfusionMatrix};
use super::report::AggregateReport;
use super::EvalError;
use crate::classifier::{BackendConfig, ClassifierConfig, ClassifierError, EmbeddedConfig, EndpointConfig, GroundednessClassifier};
use crate::corpus::{Label, QueryContextPair};

/// Seeds used when none are given.
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub pair_id: String,
    pub label: Label,
}

/// One backend over one corpus for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub corpus_id: String,
    pub backend_id: String,
    pub seed: u64,
    pub predictions: Vec<Prediction>,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub runs: Vec<EvalRun>,
    pub report: AggregateReport,
}

/// Classifies every pair with up to `concurrency` in flight; output keeps
/// corpus order.
pub async fn collect_predictions(
    classifier: &dyn GroundednessClassifier,
    corpus: &[QueryContextPair],
    concurrency: usize,
) -> Result<Vec<Prediction>, EvalError> {
    stream::iter(corpus)
        .map(|pair| async move {
            classifier
                .classify(&pair.query, &pair.context)
                .await
                .map(|v| Prediction {
                    pair_id: pair.id.clone(),
                    label: v.label,
                })
                .map_err(|source| EvalError::Classifier {
                    pair_id: pair.id.clone(),
                    source,
                })
        })
        .buffered(concurrency.max(1))
        .try_collect()
        .await
}

/// Runs one evaluation per seed. `backend_for_seed` supplies the model trained
/// with that seed.
pub async fn evaluate<F>(
    corpus_id: &str,
    corpus: &[QueryContextPair],
    seeds: &[u64],
    mut backend_for_seed: F,
    concurrency: usize,
) -> Result<Evaluation, EvalError>
where
    F: FnMut(u64) -> Result<Arc<dyn GroundednessClassifier>, ClassifierError>,
{
    if seeds.is_empty() {
        return Err(EvalError::Empty("no seeds"));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let backend = backend_for_seed(seed).map_err(|source| EvalError::Backend { seed, source })?;
        let predictions = collect_predictions(backend.as_ref(), corpus, concurrency).await?;
        let cm = confusion(&predictions, corpus)?;
        tracing::info!(seed, accuracy = cm.accuracy(), backend = backend.backend_id(), "seed finished");
        runs.push(EvalRun {
            corpus_id: corpus_id.to_string(),
            backend_id: backend.backend_id().to_string(),
            seed,
            predictions,
            accuracy: cm.accuracy(),
            confusion: cm,
        });
    }
    let report = AggregateReport::from_runs(corpus_id, corpus, &runs)?;
    Ok(Evaluation { runs, report })
}

/// `0..4` (inclusive), `0..=4`, `1,3,5` or a single seed.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, EvalError> {
    let bad = || EvalError::Seeds(text.to_string());
    let t = text.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = t.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        t.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    let mut dedup = seeds.clone();
    dedup.sort_unstable();
    dedup.dedup();
    if seeds.is_empty() || dedup.len() != seeds.len() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Builds a classifier config from a CLI backend spec, with `{seed}`
/// substituted: `lexical`, `endpoint=<url>`, `embedded=<model>,<tokenizer>`
/// or `config=<toml file>`.
pub fn backend_config(spec: &str, seed: u64, threshold: Option<f64>) -> Result<ClassifierConfig, EvalError> {
    let err = |reason: String| EvalError::BackendSpec {
        spec: spec.to_string(),
        reason,
    };
    let s = spec.replace("{seed}", &seed.to_string());
    let (kind, arg) = s.split_once('=').unwrap_or((s.as_str(), ""));
    let mut config = match kind {
        "lexical" if arg.is_empty() => ClassifierConfig::lexical(),
        "endpoint" if !arg.is_empty() => ClassifierConfig::new(BackendConfig::Endpoint(EndpointConfig::new(arg))),
        "embedded" => {
            let (model, tokenizer) = arg
                .split_once(',')
                .ok_or_else(|| err("expected embedded=<model.onnx>,<tokenizer.json>".into()))?;
            ClassifierConfig::new(BackendConfig::Embedded(EmbeddedConfig::new(model, tokenizer)))
        }
        "config" if !arg.is_empty() => {
            let text = std::fs::read_to_string(arg).map_err(|e| err(format!("{arg}: {e}")))?;
            toml::from_str(&text.replace("{seed}", &seed.to_string())).map_err(|e| err(e.to_string()))?
        }
        _ => return Err(err("unknown backend kind".into())),
    };
    if let Some(t) = threshold {
        config.threshold = t;
    }
    Ok(config)
}
