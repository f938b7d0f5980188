use serde::{Deserialize, Serialize};

use super::{CostError, CostLedger};

/// Dense multiply-adds count as two operations; the quadratic term covers
/// attention scores and the weighted sum over values.
pub const FORWARD_FLOPS_FORMULA: &str = "2*P*s + 4*L*s^2*d";

/// Forward plus backward pass, with backward taken as twice the forward cost.
pub const FINETUNE_TO_FORWARD_RATIO: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCostProfile {
    pub name: String,
    pub parameter_count: u64,
    pub layers: u64,
    pub hidden_dim: u64,
    pub sequence_length: u64,
    #[serde(default)]
    pub train_examples: u64,
    #[serde(default)]
    pub epochs: u64,
}

impl ModelCostProfile {
    /// Architecture fields must be positive; training counts may be zero.
    pub fn validate(&self) -> Result<(), CostError> {
        for (field, value) in [
            ("parameter_count", self.parameter_count),
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("sequence_length", self.sequence_length),
        ] {
            if value == 0 {
                return Err(CostError::NonPositive {
                    name: self.name.clone(),
                    field,
                });
            }
        }
        Ok(())
    }
}

pub fn forward_flops(profile: &ModelCostProfile) -> Result<f64, CostError> {
    profile.validate()?;
    let p = profile.parameter_count as f64;
    let s = profile.sequence_length as f64;
    let l = profile.layers as f64;
    let d = profile.hidden_dim as f64;
    Ok(2.0 * p * s + 4.0 * l * s * s * d)
}

pub fn finetune_flops_per_example(profile: &ModelCostProfile) -> Result<f64, CostError> {
    Ok(FINETUNE_TO_FORWARD_RATIO * forward_flops(profile)?)
}

pub fn total_finetune_flops(profile: &ModelCostProfile) -> Result<f64, CostError> {
    Ok(finetune_flops_per_example(profile)? * profile.train_examples as f64 * profile.epochs as f64)
}

/// Gated queries after which fine-tuning is paid back by LLM calls avoided.
///
/// Each gated query still costs one encoder inference, so the saving per
/// query is `llm_inference - encoder_inference`.
pub fn breakeven_queries(ft_total: f64, encoder_inference: f64, llm_inference: f64) -> Result<f64, CostError> {
    if !(ft_total.is_finite() && ft_total >= 0.0) {
        return Err(CostError::InvalidAmount("fine-tuning FLOPs"));
    }
    if !(encoder_inference.is_finite() && encoder_inference >= 0.0) {
        return Err(CostError::InvalidAmount("encoder inference FLOPs"));
    }
    if !(llm_inference.is_finite() && llm_inference > encoder_inference) {
        return Err(CostError::NoBreakeven {
            encoder: encoder_inference,
            llm: llm_inference,
        });
    }
    Ok(ft_total / (llm_inference - encoder_inference))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub profile: ModelCostProfile,
    pub formula: String,
    pub forward_flops: f64,
    pub finetune_flops_per_example: f64,
    pub total_finetune_flops: f64,
}

pub fn estimate(profile: &ModelCostProfile) -> Result<CostEstimate, CostError> {
    Ok(CostEstimate {
        profile: profile.clone(),
        formula: format!("forward = {FORWARD_FLOPS_FORMULA}; finetune/example = 3 * forward; total = finetune/example * examples * epochs"),
        forward_flops: forward_flops(profile)?,
        finetune_flops_per_example: finetune_flops_per_example(profile)?,
        total_finetune_flops: total_finetune_flops(profile)?,
    })
}

/// Encoder shape used to estimate per-request FLOPs at a given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderArchitecture {
    pub parameter_count: u64,
    pub layers: u64,
    pub hidden_dim: u64,
}

impl Default for EncoderArchitecture {
    /// BERT-base.
    fn default() -> Self {
        EncoderArchitecture {
            parameter_count: 110_000_000,
            layers: 12,
            hidden_dim: 768,
        }
    }
}

impl EncoderArchitecture {
    pub fn inference_flops(&self, sequence_length: usize) -> f64 {
        let profile = ModelCostProfile {
            name: "encoder".into(),
            parameter_count: self.parameter_count,
            layers: self.layers,
            hidden_dim: self.hidden_dim,
            sequence_length: sequence_length.max(1) as u64,
            train_examples: 0,
            epochs: 0,
        };
        forward_flops(&profile).unwrap_or(0.0)
    }
}

/// Reconstruction of the published "fewer than N queries" amortization claim.
///
/// The claim compares one encoder's fine-tuning cost against repeated LLM
/// inference. With the per-example fine-tuning column, it only holds for a
/// particular training-set size, which this note makes explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmortizationNote {
    pub encoder: String,
    pub llm: String,
    pub claimed_queries: f64,
    pub encoder_finetune_flops_per_example: f64,
    pub encoder_inference_flops: f64,
    pub llm_inference_flops: f64,
    /// `claimed * llm / finetune_per_example`, ignoring encoder inference.
    pub implied_train_examples: f64,
    /// Same, charging one encoder inference per gated query.
    pub implied_train_examples_conservative: f64,
    pub message: String,
}

pub fn amortization_note(
    ledger: &CostLedger,
    encoder: &str,
    llm: &str,
    claimed_queries: f64,
) -> Result<AmortizationNote, CostError> {
    let enc = ledger
        .entry(encoder)
        .ok_or_else(|| CostError::MissingLedgerEntry(encoder.into()))?;
    let dec = ledger.entry(llm).ok_or_else(|| CostError::MissingLedgerEntry(llm.into()))?;
    let missing = |what: &str| CostError::MissingLedgerEntry(what.to_string());
    let ft = enc.ft_flops.ok_or_else(|| missing(&format!("{encoder} fine-tuning FLOPs")))?;
    let enc_inf = enc
        .inference_flops
        .ok_or_else(|| missing(&format!("{encoder} inference FLOPs")))?;
    let llm_inf = dec.inference_flops.ok_or_else(|| missing(&format!("{llm} inference FLOPs")))?;

    let implied = claimed_queries * llm_inf / ft;
    let conservative = claimed_queries * (llm_inf - enc_inf) / ft;
    let message = format!(
        "consistency note (not asserted): {claimed_queries} {llm} queries at {llm_inf:.1e} FLOPs equal {encoder} \
         fine-tuning only if it covers about {implied:.0} examples at {ft:.1e} FLOPs each \
         ({conservative:.0} when encoder inference is charged per query)"
    );
    Ok(AmortizationNote {
        encoder: encoder.into(),
        llm: llm.into(),
        claimed_queries,
        encoder_finetune_flops_per_example: ft,
        encoder_inference_flops: enc_inf,
        llm_inference_flops: llm_inf,
        implied_train_examples: implied,
        implied_train_examples_conservative: conservative,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(p: u64, s: u64, l: u64, d: u64) -> ModelCostProfile {
        ModelCostProfile {
            name: "t".into(),
            parameter_count: p,
            layers: l,
            hidden_dim: d,
            sequence_length: s,
            train_examples: 1,
            epochs: 1,
        }
    }

    #[test]
    fn bert_base_at_512() {
        // 2*110e6*512 = 1.1264e11 ; 4*12*512^2*768 = 9.663676416e9
        let f = forward_flops(&profile(110_000_000, 512, 12, 768)).unwrap();
        assert_eq!(f, 112_640_000_000.0 + 9_663_676_416.0);
        assert!((f / 1.22e11 - 1.0).abs() < 0.01);
    }

    #[test]
    fn tiny_profile_by_hand() {
        // 2*10*1 + 4*2*1*3 = 44
        assert_eq!(forward_flops(&profile(10, 1, 2, 3)).unwrap(), 44.0);
    }

    #[test]
    fn doubling_length_more_than_doubles() {
        let a = forward_flops(&profile(110_000_000, 256, 12, 768)).unwrap();
        let b = forward_flops(&profile(110_000_000, 512, 12, 768)).unwrap();
        assert!(b > 2.0 * a);
    }

    #[test]
    fn finetune_totals() {
        let mut p = profile(1000, 8, 2, 16);
        let per = finetune_flops_per_example(&p).unwrap();
        assert_eq!(per, 3.0 * forward_flops(&p).unwrap());
        assert_eq!(total_finetune_flops(&p).unwrap(), per);
        p.epochs = 0;
        assert_eq!(total_finetune_flops(&p).unwrap(), 0.0);
        p.epochs = 2;
        p.train_examples = 10;
        assert_eq!(total_finetune_flops(&p).unwrap(), 20.0 * per);
    }

    #[test]
    fn zero_architecture_fields_rejected() {
        assert!(matches!(
            forward_flops(&profile(0, 1, 1, 1)),
            Err(CostError::NonPositive { field: "parameter_count", .. })
        ));
        assert!(forward_flops(&profile(1, 0, 1, 1)).is_err());
    }

    #[test]
    fn breakeven_cases() {
        let b = breakeven_queries(1e15, 5.1e11, 1.6e13).unwrap();
        assert!((b - 1e15 / 1.549e13).abs() < 1e-9);
        assert!((b - 64.557_779_212_395_09).abs() < 1e-9);
        assert_eq!(breakeven_queries(0.0, 5.1e11, 1.6e13).unwrap(), 0.0);
        assert!(matches!(breakeven_queries(1.0, 2.0, 2.0), Err(CostError::NoBreakeven { .. })));
        assert!(breakeven_queries(-1.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn forward_is_strictly_monotone(
            p in 1u64..1_000_000_000, s in 1u64..4096, l in 1u64..96, d in 1u64..8192,
        ) {
            let base = forward_flops(&profile(p, s, l, d)).unwrap();
            prop_assert!(forward_flops(&profile(p + 1, s, l, d)).unwrap() > base);
            prop_assert!(forward_flops(&profile(p, s + 1, l, d)).unwrap() > base);
            prop_assert!(forward_flops(&profile(p, s, l + 1, d)).unwrap() > base);
            prop_assert!(forward_flops(&profile(p, s, l, d + 1)).unwrap() > base);
        }
    }
}
