use std::time::Duration;

use async_trait::async_trait;

use crate::judge::{ChatMessage, ChatModel, ChatRequest, OpenAiChatClient};

pub const DEFAULT_ANSWER_MAX_TOKENS: u32 = 256;

/// The expensive model a grounded request is forwarded to.
#[async_trait]
pub trait AnswerModel: Send + Sync {
    /// `endpoint` is an already-allowlisted override of the default endpoint.
    async fn answer(&self, query: &str, context: &str, endpoint: Option<&str>) -> Result<String, String>;
}

pub fn answer_prompt(query: &str, context: &str) -> String {
    format!("Answer the question using only the context below.\n\nContext: {context}\n\nQuestion: {query}")
}

/// Chat-completion answer endpoint.
pub struct ChatAnswerModel {
    client: OpenAiChatClient,
    max_tokens: u32,
}

impl ChatAnswerModel {
    pub fn new(client: OpenAiChatClient, max_tokens: u32) -> Self {
        ChatAnswerModel { client, max_tokens }
    }

    pub fn from_env(url: &str, model: &str, key_env: &str, timeout: Duration, max_tokens: u32) -> Self {
        Self::new(OpenAiChatClient::from_env(url, model, key_env, timeout), max_tokens)
    }
}

#[async_trait]
impl AnswerModel for ChatAnswerModel {
    async fn answer(&self, query: &str, context: &str, endpoint: Option<&str>) -> Result<String, String> {
        let request = ChatRequest {
            model: self.client.model_id().to_string(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: answer_prompt(query, context),
            }],
            temperature: 0.0,
            max_tokens: self.max_tokens,
        };
        let result = match endpoint {
            Some(url) => self.client.with_base_url(url).complete(&request).await,
            None => self.client.complete(&request).await,
        };
        result.map_err(|e| e.to_string())
    }
}
