use std::path::{Path, PathBuf};
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::Semaphore;
use tract_onnx::prelude::*;

use super::format::{format_input, FormattedInput, Tokenizer};
use super::{ClassifierConfig, ClassifierError, GroundednessClassifier, Scored};
use crate::cost::EncoderArchitecture;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedConfig {
    /// Exported ONNX graph taking `input_ids` (and optionally `attention_mask`,
    /// `token_type_ids`) and returning class logits.
    pub model_path: PathBuf,
    /// Tokenizer in the Hugging Face `tokenizer.json` format.
    pub tokenizer_path: PathBuf,
    /// Maximum concurrent inferences.
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    /// Append a separator after the query, as BERT-style encoders expect.
    #[serde(default = "default_true")]
    pub trailing_separator: bool,
    /// Logit index of the grounded class.
    #[serde(default = "default_grounded_index")]
    pub grounded_index: usize,
}

fn default_pool() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_grounded_index() -> usize {
    1
}

impl EmbeddedConfig {
    pub fn new(model_path: impl Into<PathBuf>, tokenizer_path: impl Into<PathBuf>) -> Self {
        EmbeddedConfig {
            model_path: model_path.into(),
            tokenizer_path: tokenizer_path.into(),
            pool_size: default_pool(),
            trailing_separator: true,
            grounded_index: default_grounded_index(),
        }
    }
}

/// A `tokenizer.json` tokenizer producing vocabulary ids.
pub struct HfTokenizer {
    inner: tokenizers::Tokenizer,
    cls: u32,
    sep: u32,
    trailing_separator: bool,
}

impl HfTokenizer {
    pub fn from_file(path: &Path, cls: &str, sep: &str, trailing_separator: bool) -> Result<Self, ClassifierError> {
        let inner = tokenizers::Tokenizer::from_file(path)
            .map_err(|e| ClassifierError::Tokenizer(format!("{}: {e}", path.display())))?;
        let id = |tok: &str| {
            inner
                .token_to_id(tok)
                .ok_or_else(|| ClassifierError::Tokenizer(format!("marker {tok:?} not in vocabulary")))
        };
        Ok(HfTokenizer {
            cls: id(cls)?,
            sep: id(sep)?,
            inner,
            trailing_separator,
        })
    }
}

impl Tokenizer for HfTokenizer {
    type Token = u32;

    fn tokenize(&self, text: &str) -> Result<Vec<u32>, ClassifierError> {
        self.inner
            .encode(text, false)
            .map(|enc| enc.get_ids().to_vec())
            .map_err(|e| ClassifierError::Tokenizer(e.to_string()))
    }

    fn classification_marker(&self) -> u32 {
        self.cls
    }

    fn separator_marker(&self) -> u32 {
        self.sep
    }

    fn end_marker(&self) -> Option<u32> {
        self.trailing_separator.then_some(self.sep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelInput {
    InputIds,
    AttentionMask,
    TokenTypeIds,
}

struct Session {
    plan: TypedRunnableModel<TypedModel>,
    inputs: Vec<ModelInput>,
    tokenizer: HfTokenizer,
    max_sequence_length: usize,
    grounded_index: usize,
}

impl Session {
    fn encode(&self, query: &str, context: &str) -> Result<FormattedInput<u32>, ClassifierError> {
        format_input(query, context, self.max_sequence_length, &self.tokenizer)
    }

    fn infer(&self, formatted: &FormattedInput<u32>) -> Result<f64, ClassifierError> {
        let n = formatted.tokens.len();
        let model_err = |e: TractError| ClassifierError::Model(e.to_string());
        let tensor = |values: Vec<i64>| -> Result<TValue, ClassifierError> {
            let arr = tract_ndarray::Array2::from_shape_vec((1, n), values)
                .map_err(|e| ClassifierError::Model(e.to_string()))?;
            Ok(Tensor::from(arr).into())
        };
        let mut feed = TVec::new();
        for input in &self.inputs {
            let values: Vec<i64> = match input {
                ModelInput::InputIds => formatted.tokens.iter().map(|&t| t as i64).collect(),
                ModelInput::AttentionMask => vec![1; n],
                ModelInput::TokenTypeIds => (0..n).map(|i| i64::from(i >= formatted.first_segment_len)).collect(),
            };
            feed.push(tensor(values)?);
        }
        let outputs = self.plan.run(feed).map_err(model_err)?;
        let logits = outputs[0].to_array_view::<f32>().map_err(model_err)?;
        let row: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
        match row.len() {
            1 => Ok(1.0 / (1.0 + (-row[0]).exp())),
            len if self.grounded_index < len => {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
                Ok(exps[self.grounded_index] / exps.iter().sum::<f64>())
            }
            len => Err(ClassifierError::Model(format!(
                "model returned {len} logits; grounded index {} is out of range",
                self.grounded_index
            ))),
        }
    }
}

/// In-process ONNX classifier. Inference runs on the blocking pool, bounded
/// by `pool_size` permits over a shared, thread-safe plan.
pub struct EmbeddedClassifier {
    session: Arc<Session>,
    permits: Arc<Semaphore>,
    backend_id: String,
    model_version: String,
    threshold: f64,
    architecture: EncoderArchitecture,
}

impl EmbeddedClassifier {
    pub fn load(config: &ClassifierConfig, embedded: &EmbeddedConfig) -> Result<Self, ClassifierError> {
        if embedded.pool_size == 0 {
            return Err(ClassifierError::InvalidConfig("pool_size must be at least 1".into()));
        }
        let bytes = std::fs::read(&embedded.model_path)
            .map_err(|e| ClassifierError::Model(format!("{}: {e}", embedded.model_path.display())))?;
        let digest = hex::encode(Sha256::digest(&bytes));

        let model_err = |e: TractError| ClassifierError::Model(format!("{}: {e}", embedded.model_path.display()));
        let inference = tract_onnx::onnx().model_for_read(&mut &bytes[..]).map_err(model_err)?;
        let mut inputs = Vec::new();
        for outlet in inference.input_outlets().map_err(model_err)? {
            let name = &inference.node(outlet.node).name;
            inputs.push(match name.as_str() {
                "input_ids" => ModelInput::InputIds,
                "attention_mask" => ModelInput::AttentionMask,
                "token_type_ids" => ModelInput::TokenTypeIds,
                other => return Err(ClassifierError::Model(format!("unsupported model input {other:?}"))),
            });
        }
        if !inputs.contains(&ModelInput::InputIds) {
            return Err(ClassifierError::Model("model has no input_ids input".into()));
        }
        let plan = inference
            .into_optimized()
            .and_then(|m| m.into_runnable())
            .map_err(model_err)?;

        let tokenizer = HfTokenizer::from_file(
            &embedded.tokenizer_path,
            &config.classification_marker,
            &config.separator,
            embedded.trailing_separator,
        )?;
        let stem = embedded
            .model_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());

        Ok(EmbeddedClassifier {
            session: Arc::new(Session {
                plan,
                inputs,
                tokenizer,
                max_sequence_length: config.max_sequence_length,
                grounded_index: embedded.grounded_index,
            }),
            permits: Arc::new(Semaphore::new(embedded.pool_size)),
            backend_id: format!("embedded:{stem}"),
            model_version: format!("sha256:{}", &digest[..16]),
            threshold: config.threshold,
            architecture: config.architecture,
        })
    }

    /// Token ids the model would see for this pair.
    pub fn encode(&self, query: &str, context: &str) -> Result<FormattedInput<u32>, ClassifierError> {
        self.session.encode(query, context)
    }
}

#[async_trait]
impl GroundednessClassifier for EmbeddedClassifier {
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
        let formatted = self.session.encode(query, context)?;
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| ClassifierError::Model(e.to_string()))?;
        let session = Arc::clone(&self.session);
        let tokens = formatted.tokens.len();
        let score = tokio::task::spawn_blocking(move || session.infer(&formatted))
            .await
            .map_err(|e| ClassifierError::Model(format!("inference task failed: {e}")))??;
        Ok(Scored {
            score,
            estimated_flops: self.architecture.inference_flops(tokens),
        })
    }
}
