use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{GateDecision, GateError, GateRequest, Gateway};
use crate::classifier::GroundednessVerdict;

/// Successful response body: the decision with the caller's request id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    #[serde(flatten)]
    pub decision: GateDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ErrorResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    request_id: Option<String>,
    error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verdict: Option<GroundednessVerdict>,
}

/// One element of a batch response, in request order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<GateDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<GroundednessVerdict>,
}

fn error_response(status: u16, request_id: Option<String>, error: String, verdict: Option<GroundednessVerdict>) -> Response {
    let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (
        code,
        Json(ErrorResponse {
            request_id,
            error,
            verdict,
        }),
    )
        .into_response()
}

fn gate_error_response(e: GateError, request_id: Option<String>) -> Response {
    error_response(e.status(), request_id, e.to_string(), e.verdict().cloned())
}

async fn gate_one(State(gw): State<Arc<Gateway>>, body: Result<Json<GateRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(rej) => return error_response(400, None, rej.body_text(), None),
    };
    match gw.gate(&req).await {
        Ok(decision) => Json(GateResponse {
            request_id: req.request_id,
            decision,
        })
        .into_response(),
        Err(e) => gate_error_response(e, req.request_id),
    }
}

async fn gate_batch(State(gw): State<Arc<Gateway>>, body: Result<Json<Vec<GateRequest>>, JsonRejection>) -> Response {
    let Json(reqs) = match body {
        Ok(b) => b,
        Err(rej) => return error_response(400, None, rej.body_text(), None),
    };
    let items = futures::future::join_all(reqs.iter().map(|req| {
        let gw = gw.clone();
        async move {
            match gw.gate(req).await {
                Ok(decision) => BatchItem {
                    request_id: req.request_id.clone(),
                    status: 200,
                    decision: Some(decision),
                    error: None,
                    verdict: None,
                },
                Err(e) => BatchItem {
                    request_id: req.request_id.clone(),
                    status: e.status(),
                    decision: None,
                    error: Some(e.to_string()),
                    verdict: e.verdict().cloned(),
                },
            }
        }
    }))
    .await;
    Json(items).into_response()
}

async fn metrics(State(gw): State<Arc<Gateway>>) -> Response {
    Json(gw.metrics()).into_response()
}

/// `POST /v1/gate`, `POST /v1/gate/batch`, `GET /v1/metrics`, `GET /healthz`.
pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/gate", post(gate_one))
        .route("/v1/gate/batch", post(gate_batch))
        .route("/v1/metrics", get(metrics))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(gateway)
}
