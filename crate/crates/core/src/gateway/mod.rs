//! Classify first, then forward grounded requests to the answer model or
//! abstain. Classification failures fail closed.

mod cache;
mod config;
mod downstream;
mod http;
mod metrics;

pub use cache::{cache_key, normalize_for_key, CacheKey, DecisionCache, KeyContext};
pub use config::{DownstreamConfig, GatewayConfig};
pub use downstream::{answer_prompt, AnswerModel, ChatAnswerModel, DEFAULT_ANSWER_MAX_TOKENS};
pub use http::{router, BatchItem, GateResponse};
pub use metrics::{Metrics, MetricsSnapshot, Outcome};

use std::num::NonZeroUsize;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, GroundednessClassifier, GroundednessVerdict};
use crate::corpus::Label;

pub const DEFAULT_ABSTAIN_MESSAGE: &str =
    "The supplied context does not appear to contain the answer to this question. Please provide more information.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub query: String,
    pub context: String,
    /// Alternative answer endpoint; must be allowlisted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downstream: Option<String>,
}

impl GateRequest {
    pub fn new(query: impl Into<String>, context: impl Into<String>) -> Self {
        GateRequest {
            request_id: None,
            query: query.into(),
            context: context.into(),
            downstream: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Answer,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub verdict: GroundednessVerdict,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// Fixed refusal text, present on abstention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub cache_hit: bool,
    pub flops_saved_estimate: f64,
}

#[derive(Debug, Error)]
pub enum GateError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("downstream override not allowed: {0}")]
    DownstreamNotAllowed(String),
    #[error("classifier unavailable: {0}")]
    Classifier(#[source] ClassifierError),
    #[error("downstream failed: {message}")]
    Downstream {
        verdict: GroundednessVerdict,
        message: String,
    },
}

impl GateError {
    pub fn status(&self) -> u16 {
        match self {
            GateError::InvalidRequest(_) | GateError::DownstreamNotAllowed(_) => 400,
            GateError::Classifier(ClassifierError::QueryTooLong { .. }) => 400,
            GateError::Classifier(_) => 503,
            GateError::Downstream { .. } => 502,
        }
    }

    pub fn verdict(&self) -> Option<&GroundednessVerdict> {
        match self {
            GateError::Downstream { verdict, .. } => Some(verdict),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GatewayOptions {
    /// `None` disables caching.
    pub cache_size: Option<NonZeroUsize>,
    /// Downstream inference FLOPs avoided by one abstention.
    pub downstream_flops: f64,
    pub allowed_downstreams: Vec<String>,
    pub abstain_message: String,
}

impl Default for GatewayOptions {
    fn default() -> Self {
        GatewayOptions {
            cache_size: NonZeroUsize::new(10_000),
            downstream_flops: 1.6e13,
            allowed_downstreams: Vec::new(),
            abstain_message: DEFAULT_ABSTAIN_MESSAGE.into(),
        }
    }
}

pub struct Gateway {
    classifier: Arc<dyn GroundednessClassifier>,
    downstream: Arc<dyn AnswerModel>,
    cache: Option<DecisionCache>,
    metrics: Metrics,
    options: GatewayOptions,
}

impl Gateway {
    pub fn new(
        classifier: Arc<dyn GroundednessClassifier>,
        downstream: Arc<dyn AnswerModel>,
        options: GatewayOptions,
    ) -> Self {
        Gateway {
            classifier,
            downstream,
            cache: options.cache_size.map(DecisionCache::new),
            metrics: Metrics::new(options.downstream_flops),
            options,
        }
    }

    pub fn classifier(&self) -> &dyn GroundednessClassifier {
        self.classifier.as_ref()
    }

    pub fn cache_key(&self, request: &GateRequest) -> CacheKey {
        cache_key(
            &request.query,
            &request.context,
            request.downstream.as_deref(),
            KeyContext {
                backend_id: self.classifier.backend_id(),
                threshold: self.classifier.threshold(),
                model_version: self.classifier.model_version(),
            },
        )
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        self.metrics.snapshot()
    }

    fn check(&self, request: &GateRequest) -> Result<(), GateError> {
        if request.query.trim().is_empty() {
            return Err(GateError::InvalidRequest("query is empty".into()));
        }
        if request.context.trim().is_empty() {
            return Err(GateError::InvalidRequest("context is empty".into()));
        }
        if let Some(d) = &request.downstream {
            if !self.options.allowed_downstreams.iter().any(|a| a == d) {
                return Err(GateError::DownstreamNotAllowed(d.clone()));
            }
        }
        Ok(())
    }

    /// Routes one request. Rejected input is not counted in the metrics.
    pub async fn gate(&self, request: &GateRequest) -> Result<GateDecision, GateError> {
        self.check(request)?;
        let key = self.cache.as_ref().map(|_| self.cache_key(request));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(mut hit) = cache.get(key) {
                hit.cache_hit = true;
                self.metrics.record(match hit.action {
                    Action::Answer => Outcome::Answered { cache_hit: true },
                    Action::Abstain => Outcome::Abstained { cache_hit: true },
                });
                return Ok(hit);
            }
        }

        let verdict = match self.classifier.classify(&request.query, &request.context).await {
            Ok(v) => v,
            Err(e @ ClassifierError::QueryTooLong { .. }) => return Err(GateError::Classifier(e)),
            Err(e) => {
                tracing::warn!(error = %e, "classifier failed, abstaining without downstream call");
                self.metrics.record(Outcome::ClassifierError);
                return Err(GateError::Classifier(e));
            }
        };

        let decision = match verdict.label {
            Label::Ungrounded => GateDecision {
                verdict,
                action: Action::Abstain,
                answer: None,
                message: Some(self.options.abstain_message.clone()),
                cache_hit: false,
                flops_saved_estimate: self.options.downstream_flops,
            },
            Label::Grounded => {
                match self
                    .downstream
                    .answer(&request.query, &request.context, request.downstream.as_deref())
                    .await
                {
                    Ok(answer) => GateDecision {
                        verdict,
                        action: Action::Answer,
                        answer: Some(answer),
                        message: None,
                        cache_hit: false,
                        flops_saved_estimate: 0.0,
                    },
                    Err(message) => {
                        self.metrics.record(Outcome::DownstreamError);
                        return Err(GateError::Downstream { verdict, message });
                    }
                }
            }
        };
        self.metrics.record(match decision.action {
            Action::Answer => Outcome::Answered { cache_hit: false },
            Action::Abstain => Outcome::Abstained { cache_hit: false },
        });
        if let (Some(cache), Some(key)) = (&self.cache, key) {
            cache.insert(key, decision.clone());
        }
        Ok(decision)
    }
}
