//! Argument scoring: exact-span, head-word and coreference-credited F1,
//! trigger-distance breakdowns and the error taxonomy.
//!
//! Matching is multiset-based throughout: two identical gold pairs need two
//! identical predictions to be fully recalled.

mod io;
mod report;
mod taxonomy;

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, Argument, Document, EventInstance, Span};
use crate::Result;

pub use io::{read_predictions, read_predictions_str, write_predictions, write_predictions_string, EventPredictions, PredictionsHeader};
pub use report::{render_table, TableRow};
pub use taxonomy::{classify_error, error_taxonomy, ErrorCategory, ErrorExample, TaxonomyReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredArgument {
    pub role: String,
    pub span: Span,
    pub score: f64,
}

/// One gold event paired with the system's predictions for it.
#[derive(Debug, Clone, Copy)]
pub struct EvalItem<'a> {
    pub doc: &'a Document,
    pub event: &'a EventInstance,
    pub predictions: &'a [ScoredArgument],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    fn from_matches(tp: usize, predicted: usize, gold: usize) -> Counts {
        Counts {
            tp,
            fp: predicted - tp,
            fn_: gold - tp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

impl ScoreReport {
    pub fn from_counts(counts: Counts) -> ScoreReport {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ScoreReport {
            precision,
            recall,
            f1,
            counts,
        }
    }
}

/// How argument head words are found when scoring Head F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadRule {
    /// Require a dependency parse on every document.
    #[default]
    Dependency,
    /// Use the parse when present, otherwise the span's last word.
    LastWordFallback,
}

/// Pair gold events with predictions keyed by `(doc_id, event_index)`.
/// Events without predictions get an empty list.
pub fn align<'a>(
    corpus: &'a [AnnotatedDocument],
    predictions: &'a [EventPredictions],
) -> Vec<EvalItem<'a>> {
    let lookup: HashMap<(&str, usize), &[ScoredArgument]> = predictions
        .iter()
        .map(|p| ((p.doc_id.as_str(), p.event_index), p.predictions.as_slice()))
        .collect();
    let mut items = Vec::new();
    for doc in corpus {
        for (i, event) in doc.events.iter().enumerate() {
            let preds = lookup
                .get(&(doc.document.doc_id.as_str(), i))
                .copied()
                .unwrap_or(&[]);
            items.push(EvalItem {
                doc: &doc.document,
                event,
                predictions: preds,
            });
        }
    }
    items
}

/// Multiset intersection size of two key lists.
fn multiset_matches<K: Eq + Hash>(pred: impl IntoIterator<Item = K>, gold: impl IntoIterator<Item = K>) -> usize {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for k in gold {
        *counts.entry(k).or_default() += 1;
    }
    let mut tp = 0;
    for k in pred {
        if let Some(c) = counts.get_mut(&k) {
            if *c > 0 {
                *c -= 1;
                tp += 1;
            }
        }
    }
    tp
}

fn role_key<'a>(role: &'a str, ignore_roles: bool) -> &'a str {
    if ignore_roles {
        ""
    } else {
        role
    }
}

fn span_counts(preds: &[ScoredArgument], golds: &[Argument], ignore_roles: bool) -> Counts {
    let tp = multiset_matches(
        preds.iter().map(|p| (role_key(&p.role, ignore_roles), p.span)),
        golds.iter().map(|g| (role_key(&g.role, ignore_roles), g.span)),
    );
    Counts::from_matches(tp, preds.len(), golds.len())
}

/// Exact (role, span) matching, micro-averaged over events.
pub fn span_f1(items: &[EvalItem<'_>], ignore_roles: bool) -> ScoreReport {
    let mut total = Counts::default();
    for it in items {
        total.add(span_counts(it.predictions, &it.event.arguments, ignore_roles));
    }
    ScoreReport::from_counts(total)
}

/// Matching on (role, head word).
pub fn head_f1(items: &[EvalItem<'_>], rule: HeadRule, ignore_roles: bool) -> Result<ScoreReport> {
    let fallback = rule == HeadRule::LastWordFallback;
    let mut total = Counts::default();
    for it in items {
        let preds = it
            .predictions
            .iter()
            .map(|p| Ok((role_key(&p.role, ignore_roles), it.doc.span_head(p.span, fallback)?)))
            .collect::<Result<Vec<_>>>()?;
        let golds = it
            .event
            .arguments
            .iter()
            .map(|g| Ok((role_key(&g.role, ignore_roles), it.doc.span_head(g.span, fallback)?)))
            .collect::<Result<Vec<_>>>()?;
        let tp = multiset_matches(preds, golds);
        total.add(Counts::from_matches(tp, it.predictions.len(), it.event.arguments.len()));
    }
    Ok(ScoreReport::from_counts(total))
}

/// Order in which predictions claim golds: score descending, then span.
pub(crate) fn claim_order(preds: &[ScoredArgument]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&preds[a], &preds[b]);
        pb.score
            .total_cmp(&pa.score)
            .then(pa.span.cmp(&pb.span))
            .then(pa.role.cmp(&pb.role))
    });
    order
}

fn coref_counts(
    preds: &[ScoredArgument],
    golds: &[Argument],
    clusters: &BTreeMap<Span, usize>,
    ignore_roles: bool,
) -> Counts {
    let coreferent = |a: &Span, b: &Span| {
        a == b
            || matches!((clusters.get(a), clusters.get(b)), (Some(x), Some(y)) if x == y)
    };
    let mut used = vec![false; golds.len()];
    let mut tp = 0;
    for pi in claim_order(preds) {
        let p = &preds[pi];
        let eligible = |gi: &usize| {
            let g = &golds[*gi];
            !used[*gi] && (ignore_roles || g.role == p.role) && coreferent(&p.span, &g.span)
        };
        let exact = (0..golds.len()).find(|gi| eligible(gi) && golds[*gi].span == p.span);
        if let Some(gi) = exact.or_else(|| (0..golds.len()).find(eligible)) {
            used[gi] = true;
            tp += 1;
        }
    }
    Counts::from_matches(tp, preds.len(), golds.len())
}

/// Coreference-credited matching: a prediction matches a gold of the same
/// role when the spans are identical or share a coreference cluster. Each
/// gold is consumed at most once, predictions claiming in score order.
/// Documents without clusters fall back to exact matching.
pub fn coref_f1(items: &[EvalItem<'_>], ignore_roles: bool) -> ScoreReport {
    let mut total = Counts::default();
    let mut missing = 0;
    for it in items {
        if it.doc.coref_clusters.is_none() {
            missing += 1;
        }
        let clusters = it.doc.coref_lookup();
        total.add(coref_counts(it.predictions, &it.event.arguments, &clusters, ignore_roles));
    }
    if missing > 0 {
        log::warn!("{missing} events lack coreference clusters; scored with exact span matching");
    }
    ScoreReport::from_counts(total)
}

/// Signed sentence distance from trigger to argument, clamped to [-2, 2].
pub fn distance_bin(doc: &Document, trigger: Span, arg: Span) -> Result<i32> {
    let t = doc.sentence_index(trigger.start)? as i64;
    let a = doc.sentence_index(arg.start)? as i64;
    Ok((a - t).clamp(-2, 2) as i32)
}

/// Span F1 separately for each trigger-distance bin.
pub fn distance_breakdown(items: &[EvalItem<'_>]) -> Result<BTreeMap<i32, ScoreReport>> {
    let mut bins: BTreeMap<i32, Counts> = (-2..=2).map(|d| (d, Counts::default())).collect();
    for it in items {
        let mut pred_bins: BTreeMap<i32, Vec<ScoredArgument>> = BTreeMap::new();
        let mut gold_bins: BTreeMap<i32, Vec<Argument>> = BTreeMap::new();
        for p in it.predictions {
            let d = distance_bin(it.doc, it.event.trigger, p.span)?;
            pred_bins.entry(d).or_default().push(p.clone());
        }
        for g in &it.event.arguments {
            let d = distance_bin(it.doc, it.event.trigger, g.span)?;
            gold_bins.entry(d).or_default().push(g.clone());
        }
        for (d, counts) in bins.iter_mut() {
            let p = pred_bins.get(d).map(Vec::as_slice).unwrap_or(&[]);
            let g = gold_bins.get(d).map(Vec::as_slice).unwrap_or(&[]);
            counts.add(span_counts(p, g, false));
        }
    }
    Ok(bins
        .into_iter()
        .map(|(d, c)| (d, ScoreReport::from_counts(c)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn arg(role: &str, a: usize, b: usize) -> Argument {
        Argument {
            role: role.into(),
            span: Span::new(a, b),
        }
    }

    pub(crate) fn pred(role: &str, a: usize, b: usize, score: f64) -> ScoredArgument {
        ScoredArgument {
            role: role.into(),
            span: Span::new(a, b),
            score,
        }
    }

    fn doc(n: usize, parents: Option<Vec<Option<usize>>>) -> Document {
        Document {
            doc_id: "d".into(),
            words: vec!["w".into(); n],
            sentence_bounds: vec![Span::new(0, n - 1)],
            dep_parents: parents,
            coref_clusters: None,
            amr: None,
            source_id: None,
        }
    }

    fn event(args: Vec<Argument>) -> EventInstance {
        EventInstance {
            event_type: "attack".into(),
            trigger: Span::single(0),
            arguments: args,
        }
    }

    #[test]
    fn perfect_predictions() {
        let d = doc(12, None);
        let e = event(vec![arg("place", 5, 5), arg("attacker", 9, 10)]);
        let p = vec![pred("place", 5, 5, 1.0), pred("attacker", 9, 10, 1.0)];
        let r = span_f1(&[EvalItem { doc: &d, event: &e, predictions: &p }], false);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn missing_one_gold() {
        // 1-based spans from the reference example shifted to 0-based
        let d = doc(12, None);
        let e = event(vec![arg("place", 4, 4), arg("attacker", 8, 9), arg("target", 0, 1)]);
        let p = vec![pred("place", 4, 4, 0.9), pred("attacker", 8, 9, 0.8)];
        let r = span_f1(&[EvalItem { doc: &d, event: &e, predictions: &p }], false);
        assert_eq!(r.precision, 1.0);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn head_match_without_span_match() {
        // word 2 (1-based 3) is the shallowest in both spans
        let d = doc(5, Some(vec![None, Some(0), Some(0), Some(2), Some(3)]));
        let e = event(vec![arg("target", 2, 3)]);
        let p = vec![pred("target", 1, 3, 1.0)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        assert_eq!(d.span_head(Span::new(1, 3), false).unwrap(), 1);
        // depths tie at 1 for words 1 and 2: smaller index wins, so no match
        let h = head_f1(&items, HeadRule::Dependency, false).unwrap();
        assert_eq!(h.counts.tp, 0);

        let d = doc(5, Some(vec![None, Some(2), Some(0), Some(2), Some(3)]));
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        let h = head_f1(&items, HeadRule::Dependency, false).unwrap();
        let s = span_f1(&items, false);
        assert_eq!(h.counts, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(s.counts, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn head_f1_needs_parse() {
        let d = doc(5, None);
        let e = event(vec![arg("target", 2, 3)]);
        let p = vec![pred("target", 3, 3, 1.0)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        assert!(head_f1(&items, HeadRule::Dependency, false).is_err());
        let r = head_f1(&items, HeadRule::LastWordFallback, false).unwrap();
        assert_eq!(r.counts.tp, 1);
    }

    #[test]
    fn coref_credit_and_consumption() {
        let mut d = doc(10, None);
        d.coref_clusters = Some(vec![vec![Span::new(1, 2), Span::new(6, 6), Span::new(8, 8)]]);
        let e = event(vec![arg("victim", 1, 2)]);
        let p = vec![pred("victim", 6, 6, 0.9), pred("victim", 8, 8, 0.5)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        let r = coref_f1(&items, false);
        assert_eq!(r.counts, Counts { tp: 1, fp: 1, fn_: 0 });
        assert_eq!(span_f1(&items, false).counts.tp, 0);
    }

    #[test]
    fn coref_without_clusters_is_span_f1() {
        let d = doc(10, None);
        let e = event(vec![arg("victim", 1, 2), arg("place", 4, 4)]);
        let p = vec![pred("victim", 1, 2, 0.9), pred("place", 5, 5, 0.5)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        assert_eq!(coref_f1(&items, false), span_f1(&items, false));
    }

    #[test]
    fn duplicate_golds_need_duplicate_predictions() {
        let d = doc(10, None);
        let e = event(vec![arg("victim", 1, 2), arg("victim", 1, 2)]);
        let p = vec![pred("victim", 1, 2, 0.9)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        assert_eq!(span_f1(&items, false).counts, Counts { tp: 1, fp: 0, fn_: 1 });
    }

    #[test]
    fn identification_ignores_roles() {
        let d = doc(10, None);
        let e = event(vec![arg("victim", 1, 2)]);
        let p = vec![pred("place", 1, 2, 0.9)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        assert_eq!(span_f1(&items, true).counts.tp, 1);
        assert_eq!(span_f1(&items, false).counts.tp, 0);
    }

    #[test]
    fn distance_bins() {
        let d = Document {
            sentence_bounds: (0..5).map(|s| Span::new(2 * s, 2 * s + 1)).collect(),
            ..doc(10, None)
        };
        let e = EventInstance {
            event_type: "x".into(),
            trigger: Span::single(4),
            arguments: vec![arg("a", 5, 5), arg("b", 0, 0), arg("c", 9, 9), arg("d", 6, 7)],
        };
        assert_eq!(distance_bin(&d, e.trigger, Span::single(5)).unwrap(), 0);
        assert_eq!(distance_bin(&d, e.trigger, Span::single(0)).unwrap(), -2);
        assert_eq!(distance_bin(&d, Span::single(0), Span::single(9)).unwrap(), 2);
        let p = vec![pred("a", 5, 5, 1.0), pred("d", 6, 7, 1.0), pred("x", 2, 2, 1.0)];
        let items = [EvalItem { doc: &d, event: &e, predictions: &p }];
        let bins = distance_breakdown(&items).unwrap();
        assert_eq!(bins[&0].counts, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(bins[&1].counts, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(bins[&-1].counts, Counts { tp: 0, fp: 1, fn_: 0 });
        assert_eq!(bins[&-2].counts, Counts { tp: 0, fp: 0, fn_: 1 });
        let mut sum = Counts::default();
        for r in bins.values() {
            sum.add(r.counts);
        }
        assert_eq!(sum, span_f1(&items, false).counts);
    }

    #[test]
    fn f1_zero_when_nothing_matches() {
        let r = ScoreReport::from_counts(Counts { tp: 0, fp: 0, fn_: 0 });
        assert_eq!(r.f1, 0.0);
    }
}
