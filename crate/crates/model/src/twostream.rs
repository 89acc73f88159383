//! Global and trigger-aware local passes through one shared encoder.

use std::ops::Range;

use candle_core::{DType, Device, Tensor};
use docarg_core::corpus::{Document, Span};

use crate::config::{Ablation, SubwordPooling, WindowPolicy};
use crate::encoder::{AttentionMask, Encoder};
use crate::ops::Ctx;
use crate::{Error, Result};

/// Stand-in for −∞ in the additive mask.
pub const MASK_VALUE: f64 = -1e4;

/// Local-pass attention pattern over encoder positions.
///
/// Position `i` may attend to `j` iff both are ordinary tokens with
/// `SEN(j) ∈ {SEN(i), SEN(t)}`, or either one is a special marker
/// (`None` sentence), which attends and is attended without restriction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMask {
    size: usize,
    allowed: Vec<bool>,
}

pub fn build_local_mask(sentence_ids: &[Option<usize>], trigger_sentence: usize) -> LocalMask {
    let n = sentence_ids.len();
    let mut allowed = vec![true; n * n];
    for (i, si) in sentence_ids.iter().enumerate() {
        for (j, sj) in sentence_ids.iter().enumerate() {
            if let (Some(si), Some(sj)) = (si, sj) {
                allowed[i * n + j] = sj == si || *sj == trigger_sentence;
            }
        }
    }
    LocalMask { size: n, allowed }
}

impl LocalMask {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.size + j]
    }

    /// Additive entry `M[i][j]`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if self.is_allowed(i, j) {
            0.0
        } else {
            MASK_VALUE
        }
    }

    pub fn all_allowed(&self) -> bool {
        self.allowed.iter().all(|&a| a)
    }

    pub fn to_attention_mask(&self, dtype: DType, device: &Device) -> Result<AttentionMask> {
        let n = self.size;
        let add: Vec<f64> = (0..n * n).map(|k| self.value(k / n, k % n)).collect();
        let keep: Vec<f64> = self.allowed.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        Ok(AttentionMask {
            additive: Tensor::from_vec(add, (n, n), device)?.to_dtype(dtype)?,
            keep: Tensor::from_vec(keep, (n, n), device)?.to_dtype(dtype)?,
        })
    }
}

/// Word-level rows from subword rows. `alignment[w]` is the range of rows
/// belonging to word `w`.
pub fn pool_subwords(reps: &Tensor, alignment: &[Range<usize>], mode: SubwordPooling) -> Result<Tensor> {
    if let Some(word) = alignment.iter().position(|r| r.is_empty()) {
        return Err(Error::EmptyWord { word });
    }
    match mode {
        SubwordPooling::First => {
            let idx: Vec<u32> = alignment.iter().map(|r| r.start as u32).collect();
            Ok(reps.index_select(&Tensor::new(idx.as_slice(), reps.device())?, 0)?)
        }
        SubwordPooling::Mean => {
            let t = reps.dim(0)?;
            let mut m = vec![0.0f64; alignment.len() * t];
            for (w, r) in alignment.iter().enumerate() {
                let inv = 1.0 / r.len() as f64;
                for j in r.clone() {
                    m[w * t + j] = inv;
                }
            }
            let m = Tensor::from_vec(m, (alignment.len(), t), reps.device())?.to_dtype(reps.dtype())?;
            Ok(m.matmul(reps)?)
        }
    }
}

/// Choose the word window fed to the encoder. `subword_counts[w]` is the
/// number of positions word `w` occupies; `budget` excludes the two
/// markers.
pub fn select_window(
    doc: &Document,
    subword_counts: &[usize],
    trigger: Span,
    budget: usize,
    policy: WindowPolicy,
) -> Result<Span> {
    let total: usize = subword_counts.iter().sum();
    if doc.is_empty() {
        return Ok(Span::new(0, 0));
    }
    if total <= budget {
        return Ok(Span::new(0, doc.len() - 1));
    }
    let cost = |s: Span| -> usize { s.words().map(|w| subword_counts[w]).sum() };
    match policy {
        WindowPolicy::Truncate => {
            let mut used = 0;
            let mut end = 0;
            for (w, c) in subword_counts.iter().enumerate() {
                if used + c > budget {
                    break;
                }
                used += c;
                end = w;
            }
            if used == 0 || trigger.end > end {
                return Err(Error::TriggerOutsideWindow {
                    doc_id: doc.doc_id.clone(),
                    trigger,
                    budget,
                });
            }
            Ok(Span::new(0, end))
        }
        WindowPolicy::TriggerCentered => {
            let ts = doc.sentence_index(trigger.start)?;
            let own = doc.sentence_bounds[ts];
            if cost(own) > budget {
                return Ok(grow_words(trigger, own, subword_counts, budget));
            }
            let mut window = own;
            let mut used = cost(own);
            let (mut prev, mut next) = (ts.checked_sub(1), ts + 1);
            let mut take_prev = true;
            loop {
                let before = prev.map(|p| doc.sentence_bounds[p]);
                let after = doc.sentence_bounds.get(next).copied();
                let fits = |s: Option<Span>| s.filter(|s| used + cost(*s) <= budget);
                let pick = if take_prev {
                    fits(before).map(|s| (s, true)).or(fits(after).map(|s| (s, false)))
                } else {
                    fits(after).map(|s| (s, false)).or(fits(before).map(|s| (s, true)))
                };
                let Some((s, is_prev)) = pick else { break };
                used += cost(s);
                if is_prev {
                    window.start = s.start;
                    prev = prev.and_then(|p| p.checked_sub(1));
                } else {
                    window.end = s.end;
                    next += 1;
                }
                take_prev = !is_prev;
            }
            Ok(window)
        }
    }
}

/// Grow a window word by word around the trigger inside one sentence.
fn grow_words(trigger: Span, sentence: Span, counts: &[usize], budget: usize) -> Span {
    let mut start = trigger.start;
    let mut end = trigger.start;
    let mut used = counts[start];
    let mut left_turn = false;
    loop {
        let right = (end < sentence.end).then(|| end + 1).filter(|&w| used + counts[w] <= budget);
        let left = (start > sentence.start).then(|| start - 1).filter(|&w| used + counts[w] <= budget);
        let step = if left_turn { left.map(|w| (w, true)).or(right.map(|w| (w, false))) } else { right.map(|w| (w, false)).or(left.map(|w| (w, true))) };
        let Some((w, is_left)) = step else { break };
        used += counts[w];
        if is_left {
            start = w;
        } else {
            end = w;
        }
        left_turn = !is_left;
    }
    Span::new(start, end)
}

/// Encoder positions for one window: markers around the words, each
/// position tagged with its word's sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderInput {
    pub ids: Vec<u32>,
    pub word_ranges: Vec<Range<usize>>,
    pub position_sentence: Vec<Option<usize>>,
}

impl EncoderInput {
    pub fn new(subwords: &[Vec<u32>], word_sentence: &[usize], cls: u32, sep: u32) -> Self {
        let mut ids = vec![cls];
        let mut position_sentence = vec![None];
        let mut word_ranges = Vec::with_capacity(subwords.len());
        for (w, sub) in subwords.iter().enumerate() {
            let start = ids.len();
            ids.extend(sub);
            position_sentence.extend(std::iter::repeat(Some(word_sentence[w])).take(sub.len()));
            word_ranges.push(start..ids.len());
        }
        ids.push(sep);
        position_sentence.push(None);
        EncoderInput {
            ids,
            word_ranges,
            position_sentence,
        }
    }
}

/// Word-level representations from the two passes.
#[derive(Debug, Clone)]
pub struct TwoStreamState {
    pub z_global: Tensor,
    pub z_local: Tensor,
    pub trigger_sentence: usize,
}

/// Attention maps captured during encoding, one `heads×T×T` tensor per
/// layer.
#[derive(Debug, Default)]
pub struct EncodeProbe {
    pub global: Vec<Tensor>,
    pub local: Vec<Tensor>,
}

pub fn encode(
    encoder: &Encoder,
    input: &EncoderInput,
    trigger_sentence: usize,
    pooling: SubwordPooling,
    ablation: &Ablation,
    ctx: &Ctx,
    mut probe: Option<&mut EncodeProbe>,
) -> Result<TwoStreamState> {
    let global = if ablation.use_global {
        let h = encoder.forward(&input.ids, None, ctx, probe.as_deref_mut().map(|p| &mut p.global))?;
        Some(pool_subwords(&h, &input.word_ranges, pooling)?)
    } else {
        None
    };
    let local = if ablation.use_local {
        let mask = build_local_mask(&input.position_sentence, trigger_sentence);
        let dtype = encoder.dtype();
        let att = if mask.all_allowed() {
            None
        } else {
            Some(mask.to_attention_mask(dtype, &Device::Cpu)?)
        };
        let h = encoder.forward(&input.ids, att.as_ref(), ctx, probe.map(|p| &mut p.local))?;
        Some(pool_subwords(&h, &input.word_ranges, pooling)?)
    } else {
        None
    };
    let (z_global, z_local) = match (global, local) {
        (Some(g), Some(l)) => (g, l),
        (Some(g), None) => (g.clone(), g),
        (None, Some(l)) => (l.clone(), l),
        (None, None) => return Err(Error::Config("both encoder streams disabled".into())),
    };
    Ok(TwoStreamState {
        z_global,
        z_local,
        trigger_sentence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sentence_mask_is_all_zero() {
        let m = build_local_mask(&[Some(0); 4], 0);
        assert!(m.all_allowed());
        assert!((0..4).all(|i| (0..4).all(|j| m.value(i, j) == 0.0)));
    }

    #[test]
    fn three_sentence_mask_rows() {
        // sentences: words 0-1 in S0, 2-3 in S1 (trigger), 4-5 in S2
        let ids: Vec<Option<usize>> = [0, 0, 1, 1, 2, 2].into_iter().map(Some).collect();
        let m = build_local_mask(&ids, 1);
        for j in 0..4 {
            assert_eq!(m.value(0, j), 0.0);
        }
        for j in 4..6 {
            assert_eq!(m.value(0, j), MASK_VALUE);
        }
        for i in 2..4 {
            let allowed: Vec<usize> = (0..6).filter(|&j| m.is_allowed(i, j)).collect();
            assert_eq!(allowed, vec![2, 3]);
        }
    }

    #[test]
    fn markers_attend_everywhere() {
        let ids = vec![None, Some(0), Some(1), None];
        let m = build_local_mask(&ids, 0);
        assert!((0..4).all(|j| m.is_allowed(0, j) && m.is_allowed(j, 3)));
        assert!(!m.is_allowed(1, 2));
    }

    #[test]
    fn pooling_modes() {
        let reps = Tensor::new(&[[1.0f64, 2.0], [3.0, 4.0], [5.0, 8.0]], &Device::Cpu).unwrap();
        let ident = pool_subwords(&reps, &[0..1, 1..2, 2..3], SubwordPooling::Mean).unwrap();
        assert_eq!(ident.to_vec2::<f64>().unwrap(), reps.to_vec2::<f64>().unwrap());
        let first = pool_subwords(&reps, &[0..1, 1..3], SubwordPooling::First).unwrap();
        assert_eq!(first.to_vec2::<f64>().unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let mean = pool_subwords(&reps, &[0..1, 1..3], SubwordPooling::Mean).unwrap();
        assert_eq!(mean.to_vec2::<f64>().unwrap()[1], vec![4.0, 6.0]);
        assert!(matches!(
            pool_subwords(&reps, &[0..1, 1..1], SubwordPooling::First),
            Err(Error::EmptyWord { word: 1 })
        ));
    }

    fn doc(bounds: &[(usize, usize)]) -> Document {
        let n = bounds.last().unwrap().1 + 1;
        Document {
            doc_id: "d".into(),
            words: vec!["w".into(); n],
            sentence_bounds: bounds.iter().map(|&(a, b)| Span::new(a, b)).collect(),
            dep_parents: None,
            coref_clusters: None,
            amr: None,
            source_id: None,
        }
    }

    #[test]
    fn windows() {
        let d = doc(&[(0, 2), (3, 5), (6, 8), (9, 11)]);
        let counts = vec![1; 12];
        let full = select_window(&d, &counts, Span::single(7), 12, WindowPolicy::Truncate).unwrap();
        assert_eq!(full, Span::new(0, 11));
        assert!(matches!(
            select_window(&d, &counts, Span::single(7), 5, WindowPolicy::Truncate),
            Err(Error::TriggerOutsideWindow { .. })
        ));
        assert_eq!(
            select_window(&d, &counts, Span::single(1), 5, WindowPolicy::Truncate).unwrap(),
            Span::new(0, 4)
        );
        let w = select_window(&d, &counts, Span::single(7), 9, WindowPolicy::TriggerCentered).unwrap();
        assert_eq!(w, Span::new(3, 11));
        let w = select_window(&d, &counts, Span::single(7), 7, WindowPolicy::TriggerCentered).unwrap();
        assert_eq!(w, Span::new(3, 8));
        let w = select_window(&d, &counts, Span::single(7), 2, WindowPolicy::TriggerCentered).unwrap();
        assert_eq!(w, Span::new(7, 8));
    }
}
