//! Five-way classification of false-positive predictions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{claim_order, EvalItem, ScoredArgument};
use crate::corpus::{Argument, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    WrongSpan,
    OverExtract,
    Partial,
    Overlap,
    WrongRole,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::WrongSpan,
        ErrorCategory::OverExtract,
        ErrorCategory::Partial,
        ErrorCategory::Overlap,
        ErrorCategory::WrongRole,
    ];
}

/// Categorize a prediction that is not an exact match.
///
/// Rules apply in order: an exact span with another role is `WrongRole`; a
/// role absent from the gold set is `OverExtract`; otherwise, against golds
/// of the same role, a strict sub-span is `Partial`, any overlap is
/// `Overlap` and no overlap is `WrongSpan`.
pub fn classify_error(pred: &ScoredArgument, golds: &[Argument]) -> ErrorCategory {
    if golds.iter().any(|g| g.span == pred.span && g.role != pred.role) {
        return ErrorCategory::WrongRole;
    }
    let same_role: Vec<Span> = golds
        .iter()
        .filter(|g| g.role == pred.role)
        .map(|g| g.span)
        .collect();
    if same_role.is_empty() {
        return ErrorCategory::OverExtract;
    }
    if same_role.iter().any(|g| g.covers(&pred.span) && *g != pred.span) {
        ErrorCategory::Partial
    } else if same_role.iter().any(|g| g.overlaps(&pred.span)) {
        ErrorCategory::Overlap
    } else {
        ErrorCategory::WrongSpan
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorExample {
    pub doc_id: String,
    pub trigger: Span,
    pub prediction: ScoredArgument,
    pub category: ErrorCategory,
    /// Words of the predicted span.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyReport {
    pub counts: BTreeMap<ErrorCategory, usize>,
    pub total: usize,
    pub examples: Vec<ErrorExample>,
}

/// Predictions left unmatched by exact (role, span) multiset matching,
/// claiming golds in score order.
pub(crate) fn false_positives<'p>(preds: &'p [ScoredArgument], golds: &[Argument]) -> Vec<&'p ScoredArgument> {
    let mut used = vec![false; golds.len()];
    let mut fps = Vec::new();
    for pi in claim_order(preds) {
        let p = &preds[pi];
        match (0..golds.len()).find(|&g| !used[g] && golds[g].role == p.role && golds[g].span == p.span) {
            Some(g) => used[g] = true,
            None => fps.push(p),
        }
    }
    fps
}

/// Categorize every false positive across the given events.
pub fn error_taxonomy(items: &[EvalItem<'_>]) -> TaxonomyReport {
    let mut counts: BTreeMap<ErrorCategory, usize> =
        ErrorCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let mut examples = Vec::new();
    for it in items {
        for p in false_positives(it.predictions, &it.event.arguments) {
            let category = classify_error(p, &it.event.arguments);
            *counts.get_mut(&category).unwrap() += 1;
            let text = it
                .doc
                .words
                .get(p.span.start..=p.span.end.min(it.doc.len().saturating_sub(1)))
                .map(|ws| ws.join(" "))
                .unwrap_or_default();
            examples.push(ErrorExample {
                doc_id: it.doc.doc_id.clone(),
                trigger: it.event.trigger,
                prediction: p.clone(),
                category,
                text,
            });
        }
    }
    TaxonomyReport {
        total: examples.len(),
        counts,
        examples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tests::{arg, pred};

    #[test]
    fn categories() {
        let golds = vec![arg("target", 2, 5), arg("place", 8, 8)];
        assert_eq!(classify_error(&pred("target", 2, 3, 1.0), &golds), ErrorCategory::Partial);
        assert_eq!(classify_error(&pred("victim", 0, 0, 1.0), &golds), ErrorCategory::OverExtract);
        assert_eq!(classify_error(&pred("place", 2, 5, 1.0), &golds), ErrorCategory::WrongRole);
        assert_eq!(classify_error(&pred("target", 0, 1, 1.0), &golds), ErrorCategory::WrongSpan);
        assert_eq!(classify_error(&pred("target", 4, 6, 1.0), &golds), ErrorCategory::Overlap);
        assert_eq!(classify_error(&pred("target", 1, 6, 1.0), &golds), ErrorCategory::Overlap);
    }

    #[test]
    fn surplus_duplicate_is_an_error() {
        let golds = vec![arg("target", 2, 5)];
        let preds = vec![pred("target", 2, 5, 0.9), pred("target", 2, 5, 0.3)];
        let fps = false_positives(&preds, &golds);
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].score, 0.3);
        assert_eq!(classify_error(fps[0], &golds), ErrorCategory::Overlap);
    }
}
