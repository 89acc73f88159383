//! Gated fusion, span representations, boundary supervision, role
//! classification and decoding.

use std::collections::BTreeMap;

use candle_core::Tensor;
use docarg_core::corpus::{EventInstance, EventTypeId, RoleId, Schema, Span};
use serde::{Deserialize, Serialize};

use crate::config::HeadConfig;
use crate::ops;
use crate::params::{Init, ParamStore};
use crate::{Error, Result};

pub struct HeadWeights {
    pub gate_global: Tensor,
    pub gate_local: Tensor,
    pub gate_bias: Tensor,
    pub start_proj: Tensor,
    pub end_proj: Tensor,
    /// Separate boundary-classifier projections when not shared.
    pub boundary_proj: Option<(Tensor, Tensor)>,
    pub span_proj: Tensor,
    pub boundary_start: Tensor,
    pub boundary_end: Tensor,
    pub type_emb: Tensor,
    pub len_emb: Tensor,
    pub hidden: (Tensor, Tensor),
    pub output: (Tensor, Tensor),
}

fn uniform(fan_in: usize) -> Init {
    Init::Uniform(1.0 / (fan_in as f64).sqrt())
}

impl HeadWeights {
    pub fn new(params: &mut ParamStore, d: usize, num_event_types: usize, num_classes: usize, cfg: &HeadConfig) -> Result<Self> {
        let sq = |p: &mut ParamStore, name: &str| p.create(name, (d, d), uniform(d));
        let gate_global = sq(params, "head.gate.global")?;
        let gate_local = sq(params, "head.gate.local")?;
        let gate_bias = params.create("head.gate.bias", d, Init::Zeros)?;
        let start_proj = sq(params, "head.start")?;
        let end_proj = sq(params, "head.end")?;
        let boundary_proj = if cfg.share_boundary_projections {
            None
        } else {
            Some((sq(params, "head.boundary.start_proj")?, sq(params, "head.boundary.end_proj")?))
        };
        let span_proj = params.create("head.span", (d, 3 * d), uniform(3 * d))?;
        let boundary_start = params.create("head.boundary.start", (1, d), uniform(d))?;
        let boundary_end = params.create("head.boundary.end", (1, d), uniform(d))?;
        let type_emb = params.create("head.type_embedding", (num_event_types.max(1), cfg.d_type), Init::Normal(1.0))?;
        let len_emb = params.create("head.length_embedding", (cfg.max_span_len + 1, cfg.d_len), Init::Normal(1.0))?;
        let input = 4 * d + cfg.d_type + cfg.d_len;
        let hidden = (
            params.create("head.ffn.hidden.weight", (d, input), uniform(input))?,
            params.create("head.ffn.hidden.bias", d, Init::Zeros)?,
        );
        let output = (
            params.create("head.ffn.output.weight", (num_classes, d), uniform(d))?,
            params.create("head.ffn.output.bias", num_classes, Init::Zeros)?,
        );
        Ok(HeadWeights {
            gate_global,
            gate_local,
            gate_bias,
            start_proj,
            end_proj,
            boundary_proj,
            span_proj,
            boundary_start,
            boundary_end,
            type_emb,
            len_emb,
            hidden,
            output,
        })
    }

    pub fn classifier_input_dim(&self) -> Result<usize> {
        Ok(self.hidden.0.dim(1)?)
    }
}

/// `g ⊙ hG + (1 − g) ⊙ hL` with `g = σ(W_2 hG + W_3 hL + b)`. Returns the
/// fused rows and the gate.
pub fn gate_fuse(hg: &Tensor, hl: &Tensor, w: &HeadWeights) -> Result<(Tensor, Tensor)> {
    let pre = (ops::linear(hg, &w.gate_global, None)? + ops::linear(hl, &w.gate_local, None)?)?
        .broadcast_add(&w.gate_bias)?;
    let g = ops::sigmoid(&pre)?;
    let fused = (hl + (&g * (hg - hl)?)?)?;
    Ok((fused, g))
}

/// `V×D` averaging matrix for a list of spans.
fn averaging(spans: &[Span], num_words: usize, like: &Tensor) -> Result<Tensor> {
    let mut m = vec![0.0f64; spans.len() * num_words];
    for (c, s) in spans.iter().enumerate() {
        let inv = 1.0 / s.len() as f64;
        for i in s.words() {
            m[c * num_words + i] = inv;
        }
    }
    Ok(Tensor::from_vec(m, (spans.len(), num_words), like.device())?.to_dtype(like.dtype())?)
}

/// Mean of the rows covered by `span`, as a `1×d` tensor.
pub fn span_mean(h: &Tensor, span: Span) -> Result<Tensor> {
    averaging(&[span], h.dim(0)?, h)?.matmul(h).map_err(Error::from)
}

/// `W_span [W_s h_i; W_e h_j; mean(h_i..h_j)]` for each span, `C×d`.
pub fn span_representation(h: &Tensor, spans: &[Span], w: &HeadWeights) -> Result<Tensor> {
    let dev = h.device();
    let starts: Vec<u32> = spans.iter().map(|s| s.start as u32).collect();
    let ends: Vec<u32> = spans.iter().map(|s| s.end as u32).collect();
    let start = ops::linear(&h.index_select(&Tensor::new(starts.as_slice(), dev)?, 0)?, &w.start_proj, None)?;
    let end = ops::linear(&h.index_select(&Tensor::new(ends.as_slice(), dev)?, 0)?, &w.end_proj, None)?;
    let mean = averaging(spans, h.dim(0)?, h)?.matmul(h)?;
    ops::linear(&Tensor::cat(&[start, end, mean], 1)?, &w.span_proj, None)
}

/// Start and end indicators for every word: 1 where a gold argument of the
/// event begins (resp. ends).
pub fn boundary_targets(num_words: usize, gold: &[Span]) -> (Vec<f64>, Vec<f64>) {
    let mut ys = vec![0.0; num_words];
    let mut ye = vec![0.0; num_words];
    for s in gold {
        if s.end < num_words {
            ys[s.start] = 1.0;
            ye[s.end] = 1.0;
        }
    }
    (ys, ye)
}

#[derive(Debug, Clone)]
pub struct BoundaryOutput {
    pub loss: Tensor,
    /// Per-word logits; `σ` of these gives `P^s` and `P^e`.
    pub start_logits: Tensor,
    pub end_logits: Tensor,
}

/// Summed binary cross-entropy of the start and end classifiers.
pub fn boundary_loss(h: &Tensor, starts: &[f64], ends: &[f64], w: &HeadWeights) -> Result<BoundaryOutput> {
    let (ps, pe) = match &w.boundary_proj {
        Some((s, e)) => (s, e),
        None => (&w.start_proj, &w.end_proj),
    };
    let start_logits = ops::linear(&ops::linear(h, ps, None)?, &w.boundary_start, None)?.squeeze(1)?;
    let end_logits = ops::linear(&ops::linear(h, pe, None)?, &w.boundary_end, None)?.squeeze(1)?;
    let target = |y: &[f64]| -> Result<Tensor> {
        Ok(Tensor::new(y, h.device())?.to_dtype(h.dtype())?)
    };
    let loss = (ops::bce_with_logits_sum(&start_logits, &target(starts)?)?
        + ops::bce_with_logits_sum(&end_logits, &target(ends)?)?)?;
    Ok(BoundaryOutput {
        loss,
        start_logits,
        end_logits,
    })
}

/// Role logits (`C×classes`, NULL at 0) from
/// `I = [t; s; |t − s|; t ⊙ s; E_type; E_len]`.
pub fn classify_spans(
    spans: &Tensor,
    trigger: &Tensor,
    event_type: EventTypeId,
    lengths: &[usize],
    w: &HeadWeights,
) -> Result<Tensor> {
    let (c, d) = spans.dims2()?;
    let n_types = w.type_emb.dim(0)?;
    if event_type.0 >= n_types {
        return Err(Error::UnknownEventType(format!("id {}", event_type.0)));
    }
    let max_len = w.len_emb.dim(0)? - 1;
    if let Some(l) = lengths.iter().find(|&&l| l > max_len) {
        return Err(Error::Config(format!("span length {l} exceeds head.max_span_len {max_len}")));
    }
    let dev = spans.device();
    let t = trigger.reshape((1, d))?.broadcast_as((c, d))?;
    let ty = w
        .type_emb
        .get(event_type.0)?
        .unsqueeze(0)?
        .broadcast_as((c, w.type_emb.dim(1)?))?;
    let len_ids: Vec<u32> = lengths.iter().map(|&l| l as u32).collect();
    let len = w.len_emb.index_select(&Tensor::new(len_ids.as_slice(), dev)?, 0)?;
    let diff = (&t - spans)?.abs()?;
    let prod = (&t * spans)?;
    let input = Tensor::cat(&[t, spans.clone(), diff, prod, ty, len], 1)?;
    let hidden = ops::linear(&input, &w.hidden.0, Some(&w.hidden.1))?.relu()?;
    ops::linear(&hidden, &w.output.0, Some(&w.output.1))
}

/// Summed cross-entropy over candidates; `labels[c]` is a class index.
pub fn classification_loss(logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let (c, k) = logits.dims2()?;
    let mut onehot = vec![0.0f64; c * k];
    for (i, &l) in labels.iter().enumerate() {
        onehot[i * k + l] = 1.0;
    }
    let onehot = Tensor::from_vec(onehot, (c, k), logits.device())?.to_dtype(logits.dtype())?;
    Ok((ops::log_softmax(logits)? * onehot)?.sum_all()?.neg()?)
}

/// `L_c + λ L_b`.
pub fn total_loss(classification: &Tensor, boundary: &Tensor, lambda: f64) -> Result<Tensor> {
    if lambda == 0.0 {
        return Ok(classification.clone());
    }
    Ok((classification + (boundary * lambda)?)?)
}

/// Class labels for candidates: role class on an exact gold match, NULL
/// otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateLabels {
    pub labels: Vec<usize>,
    pub positives: usize,
    /// Gold arguments with no candidate to carry them (too long, outside
    /// the window, or sharing a span with another role).
    pub unmatched: usize,
}

pub fn label_candidates(candidates: &[Span], event: &EventInstance, schema: &Schema) -> Result<CandidateLabels> {
    let index: BTreeMap<Span, usize> = candidates.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut labels = vec![0usize; candidates.len()];
    let mut unmatched = 0;
    let mut args: Vec<_> = event.arguments.iter().collect();
    args.sort_by(|a, b| (a.span, &a.role).cmp(&(b.span, &b.role)));
    for arg in args {
        let role = schema
            .role_id(&arg.role)
            .ok_or_else(|| docarg_core::Error::UnknownLabels {
                event_types: vec![],
                roles: vec![arg.role.clone()],
            })?;
        match index.get(&arg.span) {
            Some(&c) if labels[c] == 0 => labels[c] = Schema::class_of(role),
            _ => unmatched += 1,
        }
    }
    let positives = labels.iter().filter(|&&l| l != 0).count();
    Ok(CandidateLabels {
        labels,
        positives,
        unmatched,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub legal_role_mask: bool,
    pub top1_per_role: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodedArgument {
    pub role: RoleId,
    pub span: Span,
    /// Softmax probability of the chosen class among the permitted ones.
    pub score: f64,
}

/// Per-candidate argmax decoding. Output is ordered by span, then role.
pub fn decode_event(
    logits: &[Vec<f64>],
    candidates: &[Span],
    schema: &Schema,
    event_type: EventTypeId,
    opts: DecodeOptions,
) -> Vec<DecodedArgument> {
    let mut out = Vec::new();
    for (row, span) in logits.iter().zip(candidates) {
        let permitted = |class: usize| {
            class == 0
                || !opts.legal_role_mask
                || Schema::role_of_class(class).is_some_and(|r| schema.is_legal(event_type, r))
        };
        let mut best = 0;
        for class in 1..row.len() {
            if permitted(class) && row[class] > row[best] {
                best = class;
            }
        }
        let Some(role) = Schema::role_of_class(best) else { continue };
        let m = row[best];
        let z: f64 = (0..row.len()).filter(|&c| permitted(c)).map(|c| (row[c] - m).exp()).sum();
        out.push(DecodedArgument {
            role,
            span: *span,
            score: 1.0 / z,
        });
    }
    if opts.top1_per_role {
        let mut best: BTreeMap<RoleId, DecodedArgument> = BTreeMap::new();
        for a in out {
            match best.get(&a.role) {
                Some(b) if b.score >= a.score => {}
                _ => {
                    best.insert(a.role, a);
                }
            }
        }
        out = best.into_values().collect();
    }
    out.sort_by(|a, b| (a.span, a.role).cmp(&(b.span, b.role)));
    out
}

/// Row-wise probabilities from logits, used for reporting.
pub fn probabilities(logits: &Tensor) -> Result<Tensor> {
    Ok(ops::log_softmax(logits)?.exp()?)
}
