mod common;

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing;
use axum::{Json, Router};
use groundgate::classifier::{build_classifier, BackendConfig, ClassifierConfig, EndpointConfig, LexicalClassifier};
use groundgate::gateway::{self, ChatAnswerModel, GatewayConfig, GatewayOptions, MetricsSnapshot};
use groundgate::judge::{ChatRequest, OpenAiChatClient};
use serde_json::{json, Value};

const GROUNDED_Q: &str = "Who designed the Eiffel tower?";
const GROUNDED_C: &str = "The Eiffel tower was designed by the engineer Gustave Eiffel.";
const UNGROUNDED_Q: &str = "What is the boiling point of mercury?";

#[derive(Clone)]
struct Llm {
    name: &'static str,
    calls: Arc<AtomicUsize>,
    fail: bool,
}

async fn chat(State(llm): State<Llm>, Json(req): Json<ChatRequest>) -> Response {
    llm.calls.fetch_add(1, Ordering::SeqCst);
    if llm.fail {
        return (StatusCode::INTERNAL_SERVER_ERROR, "boom").into_response();
    }
    let content = format!("{} says: {}", llm.name, req.messages[0].content.len());
    Json(json!({"choices": [{"message": {"content": content}}]})).into_response()
}

async fn llm(name: &'static str, fail: bool) -> (String, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let state = Llm {
        name,
        calls: calls.clone(),
        fail,
    };
    let url = common::spawn(Router::new().route("/v1/chat/completions", routing::post(chat)).with_state(state)).await;
    (url, calls)
}

async fn gateway_at(llm_url: &str, allowed: Vec<String>) -> String {
    let answer = ChatAnswerModel::new(
        OpenAiChatClient::new(llm_url, "answerer", None, Duration::from_secs(5)),
        64,
    );
    let gw = gateway::Gateway::new(
        Arc::new(LexicalClassifier::new(0.5)),
        Arc::new(answer),
        GatewayOptions {
            allowed_downstreams: allowed,
            ..GatewayOptions::default()
        },
    );
    common::spawn(gateway::router(Arc::new(gw))).await
}

async fn send(url: &str, body: Value) -> (u16, Value) {
    let resp = reqwest::Client::new().post(url).json(&body).send().await.unwrap();
    (resp.status().as_u16(), resp.json().await.unwrap())
}

async fn metrics(base: &str) -> MetricsSnapshot {
    reqwest::get(format!("{base}/v1/metrics")).await.unwrap().json().await.unwrap()
}

#[tokio::test]
async fn grounded_answers_and_ungrounded_abstains() {
    let (llm_url, calls) = llm("primary", false).await;
    let gw = gateway_at(&llm_url, vec![]).await;

    let (status, body) = send(
        &format!("{gw}/v1/gate"),
        json!({"request_id": "r1", "query": GROUNDED_Q, "context": GROUNDED_C}),
    )
    .await;
    assert_eq!(status, 200);
    assert_eq!(body["request_id"], "r1");
    assert_eq!(body["action"], "ANSWER");
    assert_eq!(body["verdict"]["label"], "grounded");
    assert!(body["answer"].as_str().unwrap().starts_with("primary says"));
    assert_eq!(body["cache_hit"], false);
    assert_eq!(calls.load(Ordering::SeqCst), 1);

    let (status, body) = send(&format!("{gw}/v1/gate"), json!({"query": UNGROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(status, 200);
    assert_eq!(body["action"], "ABSTAIN");
    assert!(body.get("answer").is_none());
    assert_eq!(body["message"], gateway::DEFAULT_ABSTAIN_MESSAGE);
    assert_eq!(body["flops_saved_estimate"], 1.6e13);
    assert!(body.get("request_id").is_none());
    assert_eq!(calls.load(Ordering::SeqCst), 1);

    let (_, again) = send(
        &format!("{gw}/v1/gate"),
        json!({"request_id": "r3", "query": GROUNDED_Q, "context": GROUNDED_C}),
    )
    .await;
    assert_eq!(again["cache_hit"], true);
    assert_eq!(calls.load(Ordering::SeqCst), 1);

    let m = metrics(&gw).await;
    assert_eq!((m.requests, m.answered, m.abstained, m.cache_hits), (3, 2, 1, 1));
    assert_eq!(m.cumulative_flops_saved_estimate, 1.6e13);
}

#[tokio::test]
async fn batch_gates_each_element() {
    let (llm_url, calls) = llm("primary", false).await;
    let gw = gateway_at(&llm_url, vec![]).await;
    let (status, body) = send(
        &format!("{gw}/v1/gate/batch"),
        json!([
            {"request_id": "a", "query": GROUNDED_Q, "context": GROUNDED_C},
            {"request_id": "b", "query": UNGROUNDED_Q, "context": GROUNDED_C},
            {"request_id": "c", "query": "  ", "context": GROUNDED_C},
        ]),
    )
    .await;
    assert_eq!(status, 200);
    let items = body.as_array().unwrap();
    let statuses: Vec<_> = items.iter().map(|i| i["status"].as_u64().unwrap()).collect();
    assert_eq!(statuses, [200, 200, 400]);
    let ids: Vec<_> = items.iter().map(|i| i["request_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(items[0]["decision"]["action"], "ANSWER");
    assert_eq!(items[1]["decision"]["action"], "ABSTAIN");
    assert!(items[2]["error"].as_str().unwrap().contains("query"));
    assert_eq!(calls.load(Ordering::SeqCst), 1);
    assert_eq!(metrics(&gw).await.requests, 2);
}

#[tokio::test]
async fn malformed_bodies_are_client_errors() {
    let (llm_url, _) = llm("primary", false).await;
    let gw = gateway_at(&llm_url, vec![]).await;
    let resp = reqwest::Client::new()
        .post(format!("{gw}/v1/gate"))
        .header("content-type", "application/json")
        .body("{\"query\":")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    let body: Value = resp.json().await.unwrap();
    assert!(body["error"].is_string());
    let (status, _) = send(&format!("{gw}/v1/gate"), json!({"query": "q"})).await;
    assert_eq!(status, 400);
    assert_eq!(metrics(&gw).await.requests, 0);
    let health = reqwest::get(format!("{gw}/healthz")).await.unwrap();
    assert_eq!(health.text().await.unwrap(), "ok");
}

#[tokio::test]
async fn downstream_failure_carries_the_verdict() {
    let (llm_url, calls) = llm("broken", true).await;
    let gw = gateway_at(&llm_url, vec![]).await;
    let (status, body) = send(&format!("{gw}/v1/gate"), json!({"query": GROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(status, 502);
    assert_eq!(body["verdict"]["label"], "grounded");
    assert_eq!(calls.load(Ordering::SeqCst), 1);
    // failures are not cached
    let (status, _) = send(&format!("{gw}/v1/gate"), json!({"query": GROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(status, 502);
    assert_eq!(calls.load(Ordering::SeqCst), 2);
    let m = metrics(&gw).await;
    assert_eq!((m.requests, m.answered, m.downstream_errors), (2, 2, 2));
}

#[tokio::test]
async fn downstream_override_requires_allowlist() {
    let (primary, primary_calls) = llm("primary", false).await;
    let (alt, alt_calls) = llm("alternate", false).await;
    let gw = gateway_at(&primary, vec![alt.clone()]).await;

    let (status, _) = send(
        &format!("{gw}/v1/gate"),
        json!({"query": GROUNDED_Q, "context": GROUNDED_C, "downstream": "http://127.0.0.1:1"}),
    )
    .await;
    assert_eq!(status, 400);

    let (status, body) = send(
        &format!("{gw}/v1/gate"),
        json!({"query": GROUNDED_Q, "context": GROUNDED_C, "downstream": alt}),
    )
    .await;
    assert_eq!(status, 200);
    assert!(body["answer"].as_str().unwrap().starts_with("alternate says"));
    assert_eq!(primary_calls.load(Ordering::SeqCst), 0);
    assert_eq!(alt_calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn unreachable_classifier_fails_closed() {
    let (llm_url, calls) = llm("primary", false).await;
    let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let dead_url = format!("http://{}", dead.local_addr().unwrap());
    drop(dead);
    let classifier = build_classifier(&ClassifierConfig::new(BackendConfig::Endpoint(EndpointConfig::new(dead_url)))).unwrap();
    let gw = gateway::Gateway::new(
        classifier,
        Arc::new(ChatAnswerModel::new(
            OpenAiChatClient::new(llm_url, "m", None, Duration::from_secs(5)),
            64,
        )),
        GatewayOptions {
            cache_size: NonZeroUsize::new(16),
            ..GatewayOptions::default()
        },
    );
    let url = common::spawn(gateway::router(Arc::new(gw))).await;
    let (status, body) = send(&format!("{url}/v1/gate"), json!({"query": GROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(status, 503);
    assert!(body["error"].as_str().unwrap().contains("classifier"));
    assert_eq!(calls.load(Ordering::SeqCst), 0);
    let m = metrics(&url).await;
    assert_eq!((m.requests, m.classifier_errors), (1, 1));
}

#[tokio::test]
async fn config_file_builds_a_working_gateway() {
    let (llm_url, calls) = llm("primary", false).await;
    let text = format!(
        r#"
        cache_size = 4
        [classifier]
        threshold = 0.5
        [classifier.backend]
        kind = "lexical"
        [downstream]
        url = "{llm_url}"
        model = "answerer"
        inference_flops = 2.9e12
        "#
    );
    let config = GatewayConfig::from_toml(&text).unwrap();
    let url = common::spawn(gateway::router(config.build().unwrap())).await;
    let (_, body) = send(&format!("{url}/v1/gate"), json!({"query": UNGROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(body["flops_saved_estimate"], 2.9e12);
    let (_, body) = send(&format!("{url}/v1/gate"), json!({"query": GROUNDED_Q, "context": GROUNDED_C})).await;
    assert_eq!(body["action"], "ANSWER");
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}
