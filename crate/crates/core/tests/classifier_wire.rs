mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use groundgate::classifier::wire::{self, check_conformance, ClassifyRequest, CLASSIFY_PATH};
use groundgate::classifier::{
    build_classifier, BackendConfig, ClassifierConfig, ClassifierError, EndpointClassifier, EndpointConfig,
    LexicalClassifier,
};
use groundgate::GroundednessClassifier;
use serde_json::json;

fn lexical() -> Arc<dyn GroundednessClassifier> {
    Arc::new(LexicalClassifier::new(0.5))
}

fn endpoint(url: &str, token_env: &str) -> EndpointClassifier {
    let mut e = EndpointConfig::new(url);
    e.token_env = token_env.into();
    let config = ClassifierConfig::new(BackendConfig::Endpoint(e.clone()));
    EndpointClassifier::new(&config, &e).unwrap()
}

#[tokio::test]
async fn reference_server_is_conformant() {
    let url = common::spawn(wire::router(lexical(), "lexical@en-1", None)).await;
    let report = check_conformance(&url, None).await;
    for c in &report.checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    assert_eq!(report.checks.len(), 4);
}

#[tokio::test]
async fn lenient_server_fails_conformance() {
    let lenient = Router::new().route(
        CLASSIFY_PATH,
        post(|| async { Json(json!({"score": 0.5, "model_id": "m"})) }),
    );
    let url = common::spawn(lenient).await;
    let report = check_conformance(&url, None).await;
    assert!(!report.all_passed());
    assert!(report.checks[0].passed);
    assert!(report.checks[1..].iter().all(|c| !c.passed));
}

#[tokio::test]
async fn remote_verdicts_equal_local_ones() {
    let url = common::spawn(wire::router(lexical(), "lexical@en-1", None)).await;
    let remote = endpoint(&url, "GROUNDGATE_TEST_UNSET_TOKEN");
    let local = lexical();
    let cases = [
        ("Who built the Eiffel tower?", "The Eiffel tower was built by Gustave Eiffel's company."),
        ("When did the war end?", "The treaty was signed in a small town in spring."),
        ("population of Paris", "Paris has a population of about two million."),
    ];
    for (q, c) in cases {
        let r = remote.classify(q, c).await.unwrap();
        let l = local.classify(q, c).await.unwrap();
        assert_eq!((r.label, r.score), (l.label, l.score));
        assert!(r.estimated_flops > 0.0);
        assert!(r.backend_id.starts_with("endpoint:http://127.0.0.1"));
    }
}

#[tokio::test]
async fn bearer_token_is_enforced_and_sent() {
    let url = common::spawn(wire::router(lexical(), "m", Some("s3cret".into()))).await;
    let anonymous = endpoint(&url, "GROUNDGATE_TEST_UNSET_TOKEN");
    let err = anonymous.score("q", "c").await.unwrap_err();
    assert!(matches!(err, ClassifierError::Protocol(ref m) if m.starts_with("401")), "{err}");
    assert!(!err.is_retriable());

    std::env::set_var("GROUNDGATE_TEST_WIRE_TOKEN", "s3cret");
    let authed = endpoint(&url, "GROUNDGATE_TEST_WIRE_TOKEN");
    assert!(authed.score("q", "c").await.is_ok());
    assert!(check_conformance(&url, Some("s3cret")).await.all_passed());
}

#[tokio::test]
async fn server_failures_map_to_error_kinds() {
    let mock = Router::new()
        .route("/down/v1/classify", post(|| async { (StatusCode::SERVICE_UNAVAILABLE, "busy") }))
        .route("/wide/v1/classify", post(|| async { Json(json!({"score": 1.5, "model_id": "m"})) }))
        .route("/junk/v1/classify", post(|| async { "not json" }))
        .route(
            "/echo/v1/classify",
            post(|Json(r): Json<ClassifyRequest>| async move {
                Json(json!({"score": r.max_sequence_length as f64 / 1024.0, "model_id": "echo"}))
            }),
        );
    let base = common::spawn(mock).await;
    let at = |p: &str| endpoint(&format!("{base}/{p}"), "GROUNDGATE_TEST_UNSET_TOKEN");

    let down = at("down").score("q", "c").await.unwrap_err();
    assert!(matches!(down, ClassifierError::Transport(_)) && down.is_retriable());
    assert!(matches!(at("wide").score("q", "c").await, Err(ClassifierError::Protocol(_))));
    assert!(matches!(at("junk").score("q", "c").await, Err(ClassifierError::Protocol(_))));
    // the configured max length travels with the request
    assert_eq!(at("echo").score("q", "c").await.unwrap().score, 0.5);
}

#[tokio::test]
async fn unreachable_endpoint_is_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let err = endpoint(&url, "GROUNDGATE_TEST_UNSET_TOKEN").score("q", "c").await.unwrap_err();
    assert!(matches!(err, ClassifierError::Transport(_)));
}

#[tokio::test]
async fn empty_inputs_never_reach_the_wire() {
    let c = build_classifier(&ClassifierConfig::new(BackendConfig::Endpoint(EndpointConfig::new(
        "http://127.0.0.1:9",
    ))))
    .unwrap();
    assert!(matches!(c.classify(" ", "c").await, Err(ClassifierError::EmptyQuery)));
    assert!(matches!(c.classify("q", "").await, Err(ClassifierError::EmptyContext)));
}
