use std::path::PathBuf;

use groundgate::classifier::{BackendConfig, ClassifierConfig, EmbeddedClassifier, EmbeddedConfig};
use groundgate::GroundednessClassifier;
use serde::Deserialize;

#[derive(Deserialize)]
struct Probe {
    query: String,
    context: String,
    max_sequence_length: usize,
    input_ids: Vec<u32>,
    token_type_ids: Vec<u8>,
    score: f64,
}

// Probe scores come from the torch module the ONNX graph was exported from.
const SCORE_TOLERANCE: f64 = 1e-5;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/embedded").join(name)
}

fn classifier(max_len: usize) -> EmbeddedClassifier {
    let embedded = EmbeddedConfig::new(fixture("model.onnx"), fixture("tokenizer.json"));
    let mut config = ClassifierConfig::new(BackendConfig::Embedded(embedded.clone()));
    config.max_sequence_length = max_len;
    EmbeddedClassifier::load(&config, &embedded).expect("fixture model loads")
}

fn probes() -> Vec<Probe> {
    serde_json::from_str(&std::fs::read_to_string(fixture("probe.json")).unwrap()).unwrap()
}

#[test]
fn token_ids_match_reference_formatting() {
    for p in probes() {
        let c = classifier(p.max_sequence_length);
        let f = c.encode(&p.query, &p.context).unwrap();
        assert_eq!(f.tokens, p.input_ids, "{:?}", p.query);
        let first = p.token_type_ids.iter().take_while(|&&t| t == 0).count();
        assert_eq!(f.first_segment_len, first, "{:?}", p.query);
    }
}

#[tokio::test]
async fn scores_match_reference_inference() {
    for p in probes() {
        let c = classifier(p.max_sequence_length);
        let s = c.score(&p.query, &p.context).await.unwrap();
        assert!(
            (s.score - p.score).abs() < SCORE_TOLERANCE,
            "{:?}: {} vs {}",
            p.query,
            s.score,
            p.score
        );
        assert!(s.estimated_flops > 0.0);
    }
}

#[tokio::test]
async fn concurrent_scoring_is_consistent() {
    let c = std::sync::Arc::new(classifier(64));
    let ps = probes();
    let handles: Vec<_> = ps
        .iter()
        .filter(|p| p.max_sequence_length == 64)
        .map(|p| {
            let c = c.clone();
            let (q, ctx, want) = (p.query.clone(), p.context.clone(), p.score);
            tokio::spawn(async move { (c.classify(&q, &ctx).await.unwrap().score, want) })
        })
        .collect();
    for h in handles {
        let (got, want) = h.await.unwrap();
        assert!((got - want).abs() < SCORE_TOLERANCE);
    }
}

#[test]
fn identity_is_content_addressed() {
    let c = classifier(64);
    assert_eq!(c.backend_id(), "embedded:model");
    assert!(c.model_version().starts_with("sha256:"));
    assert_eq!(c.model_version().len(), "sha256:".len() + 16);
}

#[test]
fn missing_model_is_an_error() {
    let embedded = EmbeddedConfig::new(fixture("absent.onnx"), fixture("tokenizer.json"));
    let config = ClassifierConfig::new(BackendConfig::Embedded(embedded.clone()));
    assert!(EmbeddedClassifier::load(&config, &embedded).is_err());
}
