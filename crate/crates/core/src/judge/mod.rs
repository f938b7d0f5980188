//! Zero-shot groundedness judging with chat LLMs.
//!
//! A template instruction, the context and the query are rendered into one
//! user message; the reply is mapped to yes/no by a strict first-token rule.

mod bank;
mod chat;
mod sweep;

pub use bank::{prompt_bank, template, templates_for, Domain, PromptTemplate};
pub use chat::{ChatMessage, ChatModel, ChatRequest, OpenAiChatClient, DEFAULT_API_KEY_ENV};
pub use sweep::{
    sweep, ResponseLog, ResponseRecord, SweepCell, SweepError, SweepMatrix, SweepOptions, UnparseablePolicy,
};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

pub const DEFAULT_MAX_TOKENS: u32 = 4;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint rejected the request: {0}")]
    Rejected(String),
    #[error("malformed chat response: {0}")]
    Protocol(String),
    #[error("response log {path}: {message}")]
    Log { path: String, message: String },
}

impl JudgeError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, JudgeError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Unparseable,
}

impl Verdict {
    pub fn label(self) -> Option<Label> {
        match self {
            Verdict::Yes => Some(Label::Grounded),
            Verdict::No => Some(Label::Ungrounded),
            Verdict::Unparseable => None,
        }
    }
}

/// One judged reply with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub raw: String,
    pub verdict: Verdict,
    pub template_id: String,
    pub model_id: String,
    pub latency: Duration,
}

/// Builds the chat request for one pair: instruction, `Context:` block, then
/// the query under the domain's label. Decoding is greedy and short.
pub fn render_prompt(template: &PromptTemplate, query: &str, context: &str, model: &str) -> ChatRequest {
    let content = format!(
        "{}\n\nContext: {}\n\n{} {}",
        template.text,
        context,
        template.domain.query_label(),
        query
    );
    ChatRequest {
        model: model.to_string(),
        messages: vec![ChatMessage {
            role: "user".into(),
            content,
        }],
        temperature: 0.0,
        max_tokens: DEFAULT_MAX_TOKENS,
    }
}

/// Lowercases and trims the reply, then looks only at its first alphabetic
/// token: `yes` or `no`, anything else is unparseable.
pub fn parse_verdict(raw: &str) -> Verdict {
    let lowered = raw.to_lowercase();
    let trimmed = lowered.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    let first = trimmed
        .split(|c: char| !c.is_alphabetic())
        .find(|t| !t.is_empty());
    match first {
        Some("yes") => Verdict::Yes,
        Some("no") => Verdict::No,
        _ => Verdict::Unparseable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_templates_render_verbatim() {
        let qa = template("qa-01").unwrap();
        let req = render_prompt(qa, "Who built it?", "It was built by Eiffel.", "llama");
        assert_eq!(
            req.messages[0].content,
            "Can you answer the question using the given context? Reply with 'yes' or 'no'.\n\n\
             Context: It was built by Eiffel.\n\nQuestion: Who built it?"
        );
        let ir = template("ir-01").unwrap();
        let req = render_prompt(ir, "covid origin", "Bats.", "llama");
        assert!(req.messages[0]
            .content
            .starts_with("Does the context provide relevant information to answer the query? Respond with 'yes' or 'no'."));
        assert!(req.messages[0].content.ends_with("Query: covid origin"));
        assert_eq!(req.temperature, 0.0);
        assert_eq!(req.messages.len(), 1);
    }

    #[test]
    fn rendering_is_pure() {
        let t = template("qa-07").unwrap();
        assert_eq!(render_prompt(t, "q", "c", "m"), render_prompt(t, "q", "c", "m"));
    }

    #[test]
    fn verdict_examples() {
        assert_eq!(parse_verdict("Yes."), Verdict::Yes);
        assert_eq!(parse_verdict("NO, the context lacks this."), Verdict::No);
        assert_eq!(parse_verdict("I cannot determine that."), Verdict::Unparseable);
        assert_eq!(parse_verdict(""), Verdict::Unparseable);
        assert_eq!(Verdict::Yes.label(), Some(Label::Grounded));
    }

    proptest! {
        #[test]
        fn parsing_is_total(s in "\\PC*") {
            let _ = parse_verdict(&s);
        }
    }
}
