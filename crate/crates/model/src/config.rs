use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubwordPooling {
    First,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    Truncate,
    TriggerCentered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> candle_core::DType {
        match self {
            Precision::F32 => candle_core::DType::F32,
            Precision::F64 => candle_core::DType::F64,
        }
    }
}

/// Encoder settings. `checkpoint` is `"random"` for a freshly initialised
/// transformer, a directory holding `config.json`, `tokenizer.json` and
/// `model.safetensors`, or the name of such a directory under the cache
/// directory. For pretrained checkpoints the geometry fields are replaced by
/// the checkpoint's own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub checkpoint: String,
    pub hidden_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub intermediate_dim: usize,
    pub max_positions: usize,
    pub subword_pooling: SubwordPooling,
    pub window_policy: WindowPolicy,
    pub dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            checkpoint: "random".into(),
            hidden_dim: 64,
            layers: 2,
            heads: 2,
            intermediate_dim: 128,
            max_positions: 512,
            subword_pooling: SubwordPooling::First,
            window_policy: WindowPolicy::TriggerCentered,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    pub layers: usize,
    pub share_local_global_weights: bool,
    /// One dedicated self transform per layer instead of a self term inside
    /// every relation category.
    pub single_self_loop: bool,
    /// Give cross-sentence root links their own category; otherwise they
    /// are folded into `Others`.
    pub root_link_category: bool,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig {
            layers: 3,
            share_local_global_weights: false,
            single_self_loop: false,
            root_link_category: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub lambda: f64,
    pub max_span_len: usize,
    pub legal_role_mask: bool,
    pub top1_per_role: bool,
    pub exclude_trigger_overlap: bool,
    pub d_type: usize,
    pub d_len: usize,
    pub share_boundary_projections: bool,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            lambda: 0.1,
            max_span_len: 8,
            legal_role_mask: true,
            top1_per_role: false,
            exclude_trigger_overlap: false,
            d_type: 64,
            d_len: 64,
            share_boundary_projections: true,
        }
    }
}

/// Switches that each remove one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub use_global: bool,
    pub use_local: bool,
    pub use_amr: bool,
    pub use_boundary_loss: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            use_global: true,
            use_local: true,
            use_amr: true,
            use_boundary_loss: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub interaction: InteractionConfig,
    pub head: HeadConfig,
    pub ablation: Ablation,
    pub precision: Precision,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            interaction: InteractionConfig::default(),
            head: HeadConfig::default(),
            ablation: Ablation::default(),
            precision: Precision::F32,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.encoder;
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&e.dropout) {
            return fail("encoder.dropout must lie in [0, 1)");
        }
        if e.heads == 0 || e.hidden_dim % e.heads != 0 {
            return fail("encoder.hidden_dim must be a multiple of encoder.heads");
        }
        if e.max_positions < 3 {
            return fail("encoder.max_positions must be at least 3");
        }
        if self.head.max_span_len == 0 {
            return fail("head.max_span_len must be at least 1");
        }
        if !(self.head.lambda >= 0.0) {
            return fail("head.lambda must be non-negative");
        }
        if !self.ablation.use_global && !self.ablation.use_local {
            return fail("ablation.use_global and ablation.use_local cannot both be off");
        }
        Ok(())
    }

    /// λ as applied to the update.
    pub fn effective_lambda(&self) -> f64 {
        if self.ablation.use_boundary_loss {
            self.head.lambda
        } else {
            0.0
        }
    }
}
