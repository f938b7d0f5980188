use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatAnswerModel, Gateway, GatewayOptions, DEFAULT_ABSTAIN_MESSAGE, DEFAULT_ANSWER_MAX_TOKENS};
use crate::classifier::{build_classifier, ClassifierConfig};
use crate::cost::CostLedger;
use crate::judge::DEFAULT_API_KEY_ENV;

const DEFAULT_FLOPS_MODEL: &str = "LLaMA-3.1-8B-Instruct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamConfig {
    pub url: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Per-query inference FLOPs; falls back to `flops_reference_model`.
    #[serde(default)]
    pub inference_flops: Option<f64>,
    #[serde(default = "default_flops_model")]
    pub flops_reference_model: String,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_tokens() -> u32 {
    DEFAULT_ANSWER_MAX_TOKENS
}

fn default_flops_model() -> String {
    DEFAULT_FLOPS_MODEL.into()
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_cache_size() -> usize {
    10_000
}

fn default_abstain_message() -> String {
    DEFAULT_ABSTAIN_MESSAGE.into()
}

/// `gateway serve` configuration. Secrets are named by environment variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    /// 0 disables the cache.
    #[serde(default = "default_cache_size")]
    pub cache_size: usize,
    #[serde(default)]
    pub allowed_downstreams: Vec<String>,
    #[serde(default = "default_abstain_message")]
    pub abstain_message: String,
    pub classifier: ClassifierConfig,
    pub downstream: DownstreamConfig,
}

impl GatewayConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn downstream_flops(&self) -> Result<f64, String> {
        let flops = match self.downstream.inference_flops {
            Some(f) => f,
            None => CostLedger::bundled()
                .entry(&self.downstream.flops_reference_model)
                .and_then(|e| e.inference_flops)
                .ok_or_else(|| {
                    format!(
                        "no inference FLOPs for downstream model {:?}; set downstream.inference_flops",
                        self.downstream.flops_reference_model
                    )
                })?,
        };
        if !(flops.is_finite() && flops >= 0.0) {
            return Err(format!("downstream inference FLOPs must be non-negative, got {flops}"));
        }
        Ok(flops)
    }

    pub fn options(&self) -> Result<GatewayOptions, String> {
        Ok(GatewayOptions {
            cache_size: NonZeroUsize::new(self.cache_size),
            downstream_flops: self.downstream_flops()?,
            allowed_downstreams: self.allowed_downstreams.clone(),
            abstain_message: self.abstain_message.clone(),
        })
    }

    pub fn build(&self) -> Result<Arc<Gateway>, String> {
        let classifier = build_classifier(&self.classifier).map_err(|e| e.to_string())?;
        let d = &self.downstream;
        let answer = ChatAnswerModel::from_env(
            &d.url,
            &d.model,
            &d.api_key_env,
            Duration::from_millis(d.timeout_ms),
            d.max_tokens,
        );
        Ok(Arc::new(Gateway::new(classifier, Arc::new(answer), self.options()?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [classifier]
        threshold = 0.4
        [classifier.backend]
        kind = "lexical"
        [downstream]
        url = "http://127.0.0.1:9"
        model = "llama"
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = GatewayConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.listen, default_listen());
        assert_eq!(c.cache_size, 10_000);
        assert_eq!(c.classifier.threshold, 0.4);
        assert_eq!(c.downstream_flops().unwrap(), 1.6e13);
        assert!(c.build().is_ok());
    }

    #[test]
    fn zero_cache_disables_caching() {
        let text = format!("cache_size = 0\n{MINIMAL}");
        let c = GatewayConfig::from_toml(&text).unwrap();
        assert!(c.options().unwrap().cache_size.is_none());
    }

    #[test]
    fn unknown_flops_model_is_an_error() {
        let mut c = GatewayConfig::from_toml(MINIMAL).unwrap();
        c.downstream.flops_reference_model = "GPT-4o".into();
        assert!(c.downstream_flops().is_err());
        c.downstream.inference_flops = Some(1e12);
        assert_eq!(c.downstream_flops().unwrap(), 1e12);
    }
}
