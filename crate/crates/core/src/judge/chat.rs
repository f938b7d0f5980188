use std::time::Duration;

use async_trait::async_trait;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::JudgeError;

pub const DEFAULT_API_KEY_ENV: &str = "GROUNDGATE_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// The subset of the chat-completion request body we send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[async_trait]
pub trait ChatModel: Send + Sync {
    fn model_id(&self) -> &str;

    async fn complete(&self, request: &ChatRequest) -> Result<String, JudgeError>;
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Client for `POST {base_url}/v1/chat/completions`.
#[derive(Clone)]
pub struct OpenAiChatClient {
    client: reqwest::Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl OpenAiChatClient {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        OpenAiChatClient {
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("plain HTTP client builds"),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
        }
    }

    /// Reads the API key from `key_env`, if set.
    pub fn from_env(base_url: impl Into<String>, model: impl Into<String>, key_env: &str, timeout: Duration) -> Self {
        let key = std::env::var(key_env).ok().filter(|k| !k.is_empty());
        Self::new(base_url, model, key, timeout)
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Same credentials and model against another base URL.
    pub fn with_base_url(&self, base_url: &str) -> Self {
        OpenAiChatClient {
            base_url: base_url.trim_end_matches('/').to_string(),
            ..self.clone()
        }
    }
}

#[async_trait]
impl ChatModel for OpenAiChatClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    async fn complete(&self, request: &ChatRequest) -> Result<String, JudgeError> {
        let mut req = self
            .client
            .post(format!("{}/v1/chat/completions", self.base_url))
            .json(request);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| JudgeError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            let msg = format!("{status}: {body}");
            return Err(if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
                JudgeError::Transport(msg)
            } else {
                JudgeError::Rejected(msg)
            });
        }
        let parsed: CompletionResponse = resp.json().await.map_err(|e| JudgeError::Protocol(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| JudgeError::Protocol("response has no choices".into()))
    }
}
