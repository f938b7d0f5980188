//! Groundedness classifiers behind one contract.
//!
//! Every backend turns a (query, context) pair into a score in `[0, 1]`; the
//! shared [`GroundednessClassifier::classify`] applies the inclusive threshold
//! and produces a [`GroundednessVerdict`]. Callers only ever see verdicts, so
//! backends are interchangeable.

mod embedded;
mod endpoint;
mod format;
mod lexical;
pub mod wire;

use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embedded::{EmbeddedClassifier, EmbeddedConfig, HfTokenizer};
pub use endpoint::{EndpointClassifier, EndpointConfig, DEFAULT_TOKEN_ENV};
pub use format::{format_input, format_pair, FormattedInput, Tokenizer, WhitespaceTokenizer};
pub use lexical::{lexical_overlap_score, lexical_tokens, LexicalClassifier, STOPWORDS, STOPWORDS_VERSION};

use crate::corpus::Label;
use crate::cost::EncoderArchitecture;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 512;
pub const MIN_SEQUENCE_LENGTH: usize = 16;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("context is empty")]
    EmptyContext,
    #[error("query needs {query_tokens} tokens but the sequence budget leaves room for {available}")]
    QueryTooLong { query_tokens: usize, available: usize },
    #[error("transport error talking to classifier: {0}")]
    Transport(String),
    #[error("classifier protocol error: {0}")]
    Protocol(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("tokenizer error: {0}")]
    Tokenizer(String),
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
}

impl ClassifierError {
    /// Transport failures may succeed on retry; everything else is permanent.
    pub fn is_retriable(&self) -> bool {
        matches!(self, ClassifierError::Transport(_))
    }
}

/// Binary decision for one pair, with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundednessVerdict {
    pub label: Label,
    /// Confidence that the pair is grounded.
    pub score: f64,
    pub backend_id: String,
    #[serde(with = "micros")]
    pub latency: Duration,
    pub estimated_flops: f64,
}

mod micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_micros)
    }
}

/// Inclusive threshold rule: `score >= threshold` is grounded.
pub fn threshold_decide(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Grounded
    } else {
        Label::Ungrounded
    }
}

/// Raw backend output before thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub score: f64,
    pub estimated_flops: f64,
}

#[async_trait]
pub trait GroundednessClassifier: Send + Sync {
    fn backend_id(&self) -> &str;

    /// Identifies the model artifact behind the backend; part of cache keys.
    fn model_version(&self) -> &str;

    fn threshold(&self) -> f64;

    async fn score(&self, query: &str, context: &str) -> Result<Scored, ClassifierError>;

    async fn classify(&self, query: &str, context: &str) -> Result<GroundednessVerdict, ClassifierError> {
        if query.trim().is_empty() {
            return Err(ClassifierError::EmptyQuery);
        }
        if context.trim().is_empty() {
            return Err(ClassifierError::EmptyContext);
        }
        let started = Instant::now();
        let scored = self.score(query, context).await?;
        if !(0.0..=1.0).contains(&scored.score) {
            return Err(ClassifierError::Protocol(format!("score {} outside [0, 1]", scored.score)));
        }
        Ok(GroundednessVerdict {
            label: threshold_decide(scored.score, self.threshold()),
            score: scored.score,
            backend_id: self.backend_id().to_string(),
            latency: started.elapsed(),
            estimated_flops: scored.estimated_flops,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Lexical,
    Endpoint(EndpointConfig),
    Embedded(EmbeddedConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub backend: BackendConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_max_len")]
    pub max_sequence_length: usize,
    #[serde(default = "default_separator")]
    pub separator: String,
    #[serde(default = "default_cls")]
    pub classification_marker: String,
    /// Architecture used for FLOP estimates of encoder backends.
    #[serde(default)]
    pub architecture: EncoderArchitecture,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_max_len() -> usize {
    DEFAULT_MAX_SEQUENCE_LENGTH
}

fn default_separator() -> String {
    "[SEP]".into()
}

fn default_cls() -> String {
    "[CLS]".into()
}

impl ClassifierConfig {
    pub fn new(backend: BackendConfig) -> Self {
        ClassifierConfig {
            backend,
            threshold: DEFAULT_THRESHOLD,
            max_sequence_length: DEFAULT_MAX_SEQUENCE_LENGTH,
            separator: default_separator(),
            classification_marker: default_cls(),
            architecture: EncoderArchitecture::default(),
        }
    }

    pub fn lexical() -> Self {
        Self::new(BackendConfig::Lexical)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ClassifierError::InvalidConfig(format!(
                "threshold must lie strictly inside (0, 1), got {}",
                self.threshold
            )));
        }
        if self.max_sequence_length < MIN_SEQUENCE_LENGTH {
            return Err(ClassifierError::InvalidConfig(format!(
                "max_sequence_length must be at least {MIN_SEQUENCE_LENGTH}, got {}",
                self.max_sequence_length
            )));
        }
        if self.separator.is_empty() || self.classification_marker.is_empty() {
            return Err(ClassifierError::InvalidConfig("markers must be non-empty".into()));
        }
        Ok(())
    }
}

/// Instantiates the backend named by the config.
pub fn build_classifier(config: &ClassifierConfig) -> Result<Arc<dyn GroundednessClassifier>, ClassifierError> {
    config.validate()?;
    Ok(match &config.backend {
        BackendConfig::Lexical => Arc::new(LexicalClassifier::new(config.threshold)),
        BackendConfig::Endpoint(endpoint) => Arc::new(EndpointClassifier::new(config, endpoint)?),
        BackendConfig::Embedded(embedded) => Arc::new(EmbeddedClassifier::load(config, embedded)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inclusive_boundary() {
        assert_eq!(threshold_decide(0.5, 0.5), Label::Grounded);
        assert_eq!(threshold_decide(0.49, 0.5), Label::Ungrounded);
        for t in [0.01, 0.3, 0.5, 0.99] {
            assert_eq!(threshold_decide(1.0, t), Label::Grounded);
        }
    }

    #[test]
    fn config_bounds() {
        assert!(ClassifierConfig::lexical().validate().is_ok());
        assert!(ClassifierConfig::lexical().with_threshold(0.0).validate().is_err());
        assert!(ClassifierConfig::lexical().with_threshold(1.0).validate().is_err());
        let mut c = ClassifierConfig::lexical();
        c.max_sequence_length = 15;
        assert!(c.validate().is_err());
    }

    #[test]
    fn verdict_json_shape() {
        let v = GroundednessVerdict {
            label: Label::Grounded,
            score: 0.75,
            backend_id: "lexical".into(),
            latency: Duration::from_micros(1500),
            estimated_flops: 0.0,
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(
            json,
            r#"{"label":"grounded","score":0.75,"backend_id":"lexical","latency":1500,"estimated_flops":0.0}"#
        );
        assert_eq!(serde_json::from_str::<GroundednessVerdict>(&json).unwrap(), v);
    }

    #[test]
    fn config_from_toml() {
        let c: ClassifierConfig = toml::from_str(
            r#"
            threshold = 0.6
            [backend]
            kind = "endpoint"
            url = "http://localhost:9000"
            "#,
        )
        .unwrap();
        assert_eq!(c.threshold, 0.6);
        assert_eq!(c.separator, "[SEP]");
        assert!(matches!(c.backend, BackendConfig::Endpoint(_)));
    }

    proptest! {
        #[test]
        fn label_is_monotone_in_score(a in 0.0f64..=1.0, b in 0.0f64..=1.0, t in 0.001f64..0.999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if threshold_decide(lo, t) == Label::Grounded {
                prop_assert_eq!(threshold_decide(hi, t), Label::Grounded);
            }
            prop_assert_eq!(threshold_decide(a, t) == Label::Grounded, a >= t);
        }
    }
}
