use std::time::Duration;

use async_trait::async_trait;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::wire::{ClassifyRequest, ClassifyResponse, CLASSIFY_PATH};
use super::{ClassifierConfig, ClassifierError, GroundednessClassifier, Scored};
use crate::cost::EncoderArchitecture;

pub const DEFAULT_TOKEN_ENV: &str = "GROUNDGATE_CLASSIFIER_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Environment variable holding the bearer token, if any.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default = "default_version")]
    pub model_version: String,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.into()
}

fn default_version() -> String {
    "unversioned".into()
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            timeout_ms: default_timeout_ms(),
            token_env: default_token_env(),
            model_version: default_version(),
        }
    }
}

/// Client for a remote encoder served over the classify wire contract.
pub struct EndpointClassifier {
    client: reqwest::Client,
    url: String,
    backend_id: String,
    model_version: String,
    token: Option<String>,
    threshold: f64,
    max_sequence_length: usize,
    architecture: EncoderArchitecture,
}

impl EndpointClassifier {
    pub fn new(config: &ClassifierConfig, endpoint: &EndpointConfig) -> Result<Self, ClassifierError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(endpoint.timeout_ms))
            .build()
            .map_err(|e| ClassifierError::InvalidConfig(e.to_string()))?;
        let base = endpoint.url.trim_end_matches('/');
        Ok(EndpointClassifier {
            client,
            url: format!("{base}{CLASSIFY_PATH}"),
            backend_id: format!("endpoint:{base}"),
            model_version: endpoint.model_version.clone(),
            token: std::env::var(&endpoint.token_env).ok().filter(|t| !t.is_empty()),
            threshold: config.threshold,
            max_sequence_length: config.max_sequence_length,
            architecture: config.architecture,
        })
    }
}

#[async_trait]
impl GroundednessClassifier for EndpointClassifier {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn model_version(&self) -> &str {
        &self.model_version
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    async fn score(&self, query: &str, context: &str) -> Result<Scored, ClassifierError> {
        let body = ClassifyRequest {
            query: query.to_string(),
            context: context.to_string(),
            max_sequence_length: self.max_sequence_length,
        };
        let mut request = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .await
            .map_err(|e| ClassifierError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            let message = format!("{status}: {text}");
            return Err(
                if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT {
                    ClassifierError::Transport(message)
                } else {
                    ClassifierError::Protocol(message)
                },
            );
        }
        let bytes = response
            .bytes()
            .await
            .map_err(|e| ClassifierError::Transport(e.to_string()))?;
        let parsed: ClassifyResponse =
            serde_json::from_slice(&bytes).map_err(|e| ClassifierError::Protocol(format!("bad response body: {e}")))?;
        if !(0.0..=1.0).contains(&parsed.score) {
            return Err(ClassifierError::Protocol(format!("score {} outside [0, 1]", parsed.score)));
        }
        // Server-side tokenization is unknown; whitespace tokens bound the length.
        let approx_tokens = (query.split_whitespace().count() + context.split_whitespace().count() + 2)
            .min(self.max_sequence_length);
        Ok(Scored {
            score: parsed.score,
            estimated_flops: self.architecture.inference_flops(approx_tokens),
        })
    }
}
