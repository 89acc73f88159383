//! BERT-layout transformer encoder whose parameter names follow the
//! published checkpoint layout, so pretrained weights load by name.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::ops::{self, Ctx};
use crate::params::{Init, ParamStore};
use crate::{Error, Result};

/// Transformer geometry, either from the run config or from a pretrained
/// checkpoint's `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub intermediate_dim: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub layer_norm_eps: f64,
    /// First position id (2 for RoBERTa-style checkpoints).
    pub position_offset: usize,
}

impl TransformerConfig {
    /// Positions usable by tokens.
    pub fn usable_positions(&self) -> usize {
        self.max_positions - self.position_offset
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    /// Read a Hugging Face style `config.json`.
    pub fn from_hf_json(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Checkpoint {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let num = |k: &str| {
            v.get(k)
                .and_then(|x| x.as_u64())
                .map(|x| x as usize)
                .ok_or_else(|| bad(format!("missing integer field `{k}`")))
        };
        let model_type = v.get("model_type").and_then(|x| x.as_str()).unwrap_or("bert");
        let position_offset = match model_type {
            "roberta" | "xlm-roberta" | "camembert" => {
                v.get("pad_token_id").and_then(|x| x.as_u64()).unwrap_or(1) as usize + 1
            }
            _ => 0,
        };
        if let Some(act) = v.get("hidden_act").and_then(|x| x.as_str()) {
            if act != "gelu" {
                return Err(bad(format!("unsupported activation `{act}`")));
            }
        }
        Ok(TransformerConfig {
            vocab_size: num("vocab_size")?,
            hidden_dim: num("hidden_size")?,
            layers: num("num_hidden_layers")?,
            heads: num("num_attention_heads")?,
            intermediate_dim: num("intermediate_size")?,
            max_positions: num("max_position_embeddings")?,
            type_vocab_size: v.get("type_vocab_size").and_then(|x| x.as_u64()).unwrap_or(2) as usize,
            layer_norm_eps: v.get("layer_norm_eps").and_then(|x| x.as_f64()).unwrap_or(1e-12),
            position_offset,
        })
    }
}

struct LayerWeights {
    q: (Tensor, Tensor),
    k: (Tensor, Tensor),
    v: (Tensor, Tensor),
    o: (Tensor, Tensor),
    ln1: (Tensor, Tensor),
    ffn_in: (Tensor, Tensor),
    ffn_out: (Tensor, Tensor),
    ln2: (Tensor, Tensor),
}

/// Attention restriction for one pass: an additive bias and a 0/1 keep
/// matrix, both `T×T`.
pub struct AttentionMask {
    pub additive: Tensor,
    pub keep: Tensor,
}

pub struct Encoder {
    pub config: TransformerConfig,
    word_emb: Tensor,
    pos_emb: Tensor,
    type_emb: Tensor,
    emb_ln: (Tensor, Tensor),
    layers: Vec<LayerWeights>,
}

impl Encoder {
    pub fn new(params: &mut ParamStore, config: TransformerConfig) -> Result<Self> {
        let d = config.hidden_dim;
        let f = config.intermediate_dim;
        let normal = Init::Normal(0.02);
        let dense = |p: &mut ParamStore, name: String, out: usize, inp: usize| -> Result<(Tensor, Tensor)> {
            Ok((
                p.create(&format!("{name}.weight"), (out, inp), normal)?,
                p.create(&format!("{name}.bias"), out, Init::Zeros)?,
            ))
        };
        let ln = |p: &mut ParamStore, name: String| -> Result<(Tensor, Tensor)> {
            Ok((
                p.create(&format!("{name}.weight"), d, Init::Ones)?,
                p.create(&format!("{name}.bias"), d, Init::Zeros)?,
            ))
        };
        let word_emb = params.create("embeddings.word_embeddings.weight", (config.vocab_size, d), normal)?;
        let pos_emb = params.create("embeddings.position_embeddings.weight", (config.max_positions, d), normal)?;
        let type_emb = params.create("embeddings.token_type_embeddings.weight", (config.type_vocab_size, d), normal)?;
        let emb_ln = ln(params, "embeddings.LayerNorm".into())?;
        let mut layers = Vec::with_capacity(config.layers);
        for i in 0..config.layers {
            let p = format!("encoder.layer.{i}");
            layers.push(LayerWeights {
                q: dense(params, format!("{p}.attention.self.query"), d, d)?,
                k: dense(params, format!("{p}.attention.self.key"), d, d)?,
                v: dense(params, format!("{p}.attention.self.value"), d, d)?,
                o: dense(params, format!("{p}.attention.output.dense"), d, d)?,
                ln1: ln(params, format!("{p}.attention.output.LayerNorm"))?,
                ffn_in: dense(params, format!("{p}.intermediate.dense"), f, d)?,
                ffn_out: dense(params, format!("{p}.output.dense"), d, f)?,
                ln2: ln(params, format!("{p}.output.LayerNorm"))?,
            });
        }
        Ok(Encoder {
            config,
            word_emb,
            pos_emb,
            type_emb,
            emb_ln,
            layers,
        })
    }

    pub fn dtype(&self) -> DType {
        self.word_emb.dtype()
    }

    /// Encode `ids` (`T` token ids). With `probe`, the attention
    /// probabilities of every layer (`heads×T×T`) are appended to it.
    pub fn forward(
        &self,
        ids: &[u32],
        mask: Option<&AttentionMask>,
        ctx: &Ctx,
        mut probe: Option<&mut Vec<Tensor>>,
    ) -> Result<Tensor> {
        let cfg = &self.config;
        let t = ids.len();
        let dev = self.word_emb.device();
        let ids_t = Tensor::new(ids, dev)?;
        let pos: Vec<u32> = (0..t).map(|i| (i + cfg.position_offset) as u32).collect();
        let pos_t = Tensor::new(pos.as_slice(), dev)?;
        let x = self
            .word_emb
            .index_select(&ids_t, 0)?
            .add(&self.pos_emb.index_select(&pos_t, 0)?)?
            .broadcast_add(&self.type_emb.get(0)?)?;
        let mut x = ctx.dropout(&ops::layer_norm(&x, &self.emb_ln.0, &self.emb_ln.1, cfg.layer_norm_eps)?)?;
        let (h, dh) = (cfg.heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        for layer in &self.layers {
            let split = |w: &(Tensor, Tensor)| -> Result<Tensor> {
                Ok(ops::linear(&x, &w.0, Some(&w.1))?
                    .reshape((t, h, dh))?
                    .transpose(0, 1)?
                    .contiguous()?)
            };
            let (q, k, v) = (split(&layer.q)?, split(&layer.k)?, split(&layer.v)?);
            let mut scores = q.matmul(&k.t()?.contiguous()?)?;
            if let Some(m) = mask {
                scores = scores.broadcast_add(&m.additive)?;
            }
            let probs = ops::masked_softmax(&(scores * scale)?, mask.map(|m| &m.keep))?;
            if let Some(p) = probe.as_deref_mut() {
                p.push(probs.clone());
            }
            let ctx_v = ctx
                .dropout(&probs)?
                .matmul(&v)?
                .transpose(0, 1)?
                .contiguous()?
                .reshape((t, cfg.hidden_dim))?;
            let attn = ctx.dropout(&ops::linear(&ctx_v, &layer.o.0, Some(&layer.o.1))?)?;
            x = ops::layer_norm(&(x + attn)?, &layer.ln1.0, &layer.ln1.1, cfg.layer_norm_eps)?;
            let inner = ops::linear(&x, &layer.ffn_in.0, Some(&layer.ffn_in.1))?.gelu_erf()?;
            let out = ctx.dropout(&ops::linear(&inner, &layer.ffn_out.0, Some(&layer.ffn_out.1))?)?;
            x = ops::layer_norm(&(x + out)?, &layer.ln2.0, &layer.ln2.1, cfg.layer_norm_eps)?;
        }
        Ok(x)
    }
}

const MODEL_PREFIXES: [&str; 5] = ["bert.", "roberta.", "electra.", "xlm-roberta.", "model."];

/// Map a published checkpoint tensor name onto the encoder's parameter
/// name, or `None` for tensors the encoder does not use.
pub fn map_checkpoint_name(name: &str) -> Option<String> {
    let mut n = name;
    for p in MODEL_PREFIXES {
        if let Some(rest) = n.strip_prefix(p) {
            n = rest;
            break;
        }
    }
    if !(n.starts_with("embeddings.") || n.starts_with("encoder.layer.")) {
        return None;
    }
    if n.ends_with("position_ids") {
        return None;
    }
    let n = n.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias");
    Some(n)
}

/// Copy pretrained encoder weights from a safetensors file into `params`.
/// Every encoder parameter must be present.
pub fn load_pretrained(params: &ParamStore, path: &Path) -> Result<()> {
    let tensors: HashMap<String, Tensor> = ParamStore::read_file(path)?;
    let mut found = std::collections::BTreeSet::new();
    for (name, t) in &tensors {
        let Some(mapped) = map_checkpoint_name(name) else { continue };
        if params.get(&mapped).is_some() {
            params.set(&mapped, &t.to_dtype(DType::F64)?)?;
            found.insert(mapped);
        }
    }
    let missing: Vec<&str> = params
        .names()
        .filter(|n| (n.starts_with("embeddings.") || n.starts_with("encoder.layer.")) && !found.contains(*n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!("encoder parameters missing from checkpoint: {missing:?}"),
        });
    }
    Ok(())
}
