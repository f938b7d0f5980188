//! The remote classifier HTTP contract: `POST /v1/classify`.
//!
//! Request `{query, context, max_sequence_length}`, response `{score, model_id}`.
//! This module holds the wire types, a server that exposes any local backend
//! over the contract, and a conformance check usable against any server.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{ClassifierError, GroundednessClassifier};

pub const CLASSIFY_PATH: &str = "/v1/classify";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub query: String,
    pub context: String,
    pub max_sequence_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub score: f64,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Clone)]
struct ServerState {
    classifier: Arc<dyn GroundednessClassifier>,
    model_id: String,
    bearer_token: Option<String>,
}

fn reject(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

async fn classify_handler(State(state): State<ServerState>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(token) = &state.bearer_token {
        let presented = headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return reject(StatusCode::UNAUTHORIZED, "missing or invalid bearer token");
        }
    }
    let request: ClassifyRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return reject(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")),
    };
    if request.query.trim().is_empty() || request.context.trim().is_empty() {
        return reject(StatusCode::BAD_REQUEST, "query and context must be non-empty");
    }
    match state.classifier.score(&request.query, &request.context).await {
        Ok(scored) => Json(ClassifyResponse {
            score: scored.score,
            model_id: state.model_id.clone(),
        })
        .into_response(),
        Err(e @ (ClassifierError::QueryTooLong { .. } | ClassifierError::EmptyQuery | ClassifierError::EmptyContext)) => {
            reject(StatusCode::BAD_REQUEST, e.to_string())
        }
        Err(e) => reject(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
    }
}

/// Serves a local backend over the classify contract, plus `GET /healthz`.
pub fn router(classifier: Arc<dyn GroundednessClassifier>, model_id: impl Into<String>, bearer_token: Option<String>) -> Router {
    let state = ServerState {
        classifier,
        model_id: model_id.into(),
        bearer_token,
    };
    Router::new()
        .route(CLASSIFY_PATH, post(classify_handler))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub base_url: String,
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the wire-contract checks against a live server.
pub async fn check_conformance(base_url: &str, bearer_token: Option<&str>) -> ConformanceReport {
    let client = reqwest::Client::new();
    let url = format!("{}{CLASSIFY_PATH}", base_url.trim_end_matches('/'));
    let send = |body: String| {
        let mut req = client
            .post(&url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body);
        if let Some(t) = bearer_token {
            req = req.bearer_auth(t);
        }
        req.send()
    };
    let mut checks = Vec::new();

    let valid = serde_json::to_string(&ClassifyRequest {
        query: "Where did the Normans settle?".into(),
        context: "The Normans settled in Normandy, a region in France.".into(),
        max_sequence_length: 128,
    })
    .unwrap();
    let detail = match send(valid).await {
        Err(e) => Err(format!("request failed: {e}")),
        Ok(resp) if !resp.status().is_success() => Err(format!("status {}", resp.status())),
        Ok(resp) => match resp.json::<ClassifyResponse>().await {
            Err(e) => Err(format!("response does not match {{score, model_id}}: {e}")),
            Ok(r) if !(0.0..=1.0).contains(&r.score) => Err(format!("score {} outside [0, 1]", r.score)),
            Ok(r) if r.model_id.is_empty() => Err("empty model_id".into()),
            Ok(r) => Ok(format!("score {} from {}", r.score, r.model_id)),
        },
    };
    checks.push(to_check("valid request returns score in [0,1] and model_id", detail));

    for (name, body) in [
        ("missing context is rejected with 4xx", r#"{"query":"q","max_sequence_length":64}"#),
        ("missing query is rejected with 4xx", r#"{"context":"c","max_sequence_length":64}"#),
        ("malformed JSON is rejected with 4xx", r#"{"query": "#),
    ] {
        let detail = match send(body.to_string()).await {
            Err(e) => Err(format!("request failed: {e}")),
            Ok(resp) if resp.status().is_client_error() => Ok(format!("status {}", resp.status())),
            Ok(resp) => Err(format!("expected 4xx, got {}", resp.status())),
        };
        checks.push(to_check(name, detail));
    }

    ConformanceReport {
        base_url: base_url.to_string(),
        checks,
    }
}

fn to_check(name: &'static str, detail: Result<String, String>) -> ConformanceCheck {
    match detail {
        Ok(detail) => ConformanceCheck {
            name,
            passed: true,
            detail,
        },
        Err(detail) => ConformanceCheck {
            name,
            passed: false,
            detail,
        },
    }
}
