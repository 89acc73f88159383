//! Running a model over a corpus and scoring predictions.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use docarg_core::corpus::AnnotatedDocument;
use docarg_core::metrics::{
    align, coref_f1, distance_breakdown, error_taxonomy, head_f1, render_table, span_f1, ErrorCategory,
    EventPredictions, HeadRule, ScoreReport, TableRow,
};
use docarg_model::{ArgumentModel, PreparedExample};
use serde::{Deserialize, Serialize};

use crate::config::SelectionMetric;

/// Predictions for every prepared example, in example order.
pub fn predict_examples(model: &ArgumentModel, examples: &[PreparedExample]) -> Result<Vec<EventPredictions>> {
    examples
        .iter()
        .map(|ex| {
            Ok(EventPredictions {
                doc_id: ex.doc_id.clone(),
                event_index: ex.event_index,
                predictions: model
                    .predict(ex)
                    .with_context(|| format!("predicting {} event {}", ex.doc_id, ex.event_index))?,
            })
        })
        .collect()
}

/// Gold arguments written as predictions with score 1.
pub fn gold_as_predictions(docs: &[AnnotatedDocument]) -> Vec<EventPredictions> {
    docs.iter()
        .flat_map(|d| {
            d.events.iter().enumerate().map(|(i, e)| EventPredictions {
                doc_id: d.document.doc_id.clone(),
                event_index: i,
                predictions: e
                    .arguments
                    .iter()
                    .map(|a| docarg_core::metrics::ScoredArgument {
                        role: a.role.clone(),
                        span: a.span,
                        score: 1.0,
                    })
                    .collect(),
            })
        })
        .collect()
}

pub fn selection_value(
    metric: SelectionMetric,
    docs: &[AnnotatedDocument],
    preds: &[EventPredictions],
    head_rule: HeadRule,
) -> Result<f64> {
    let items = align(docs, preds);
    Ok(match metric {
        SelectionMetric::SpanF1 => span_f1(&items, false).f1,
        SelectionMetric::HeadF1 => head_f1(&items, head_rule, false)?.f1,
    })
}

/// Classification and identification (roles ignored) variants of a score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorePair {
    pub classification: ScoreReport,
    pub identification: ScoreReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub events: usize,
    pub predicted_arguments: usize,
    pub gold_arguments: usize,
    pub span: ScorePair,
    pub head: ScorePair,
    /// Present when every document carries coreference clusters.
    pub coref: Option<ScorePair>,
    pub distance: BTreeMap<i32, ScoreReport>,
    pub errors: BTreeMap<ErrorCategory, usize>,
    /// Duplicate gold fillers need duplicate predictions.
    pub multiset_matching: bool,
    pub head_rule: HeadRule,
}

pub fn score(docs: &[AnnotatedDocument], preds: &[EventPredictions], head_rule: HeadRule) -> Result<EvaluationReport> {
    let items = align(docs, preds);
    let pair = |f: &dyn Fn(bool) -> Result<ScoreReport>| -> Result<ScorePair> {
        Ok(ScorePair {
            classification: f(false)?,
            identification: f(true)?,
        })
    };
    let span = pair(&|ignore| Ok(span_f1(&items, ignore)))?;
    let head = pair(&|ignore| Ok(head_f1(&items, head_rule, ignore)?))
        .context("head-word scoring needs dependency parses; pass --head-rule last-word-fallback (or head_rule = \"last_word_fallback\" in a config) to score without them")?;
    let coref = if !docs.is_empty() && docs.iter().all(|d| d.document.coref_clusters.is_some()) {
        Some(pair(&|ignore| Ok(coref_f1(&items, ignore)))?)
    } else {
        None
    };
    Ok(EvaluationReport {
        events: items.len(),
        predicted_arguments: items.iter().map(|i| i.predictions.len()).sum(),
        gold_arguments: items.iter().map(|i| i.event.arguments.len()).sum(),
        span,
        head,
        coref,
        distance: distance_breakdown(&items)?,
        errors: error_taxonomy(&items).counts,
        multiset_matching: true,
        head_rule,
    })
}

impl EvaluationReport {
    pub fn table(&self) -> String {
        let mut rows = vec![
            TableRow { label: "Span F1 (classification)".into(), report: &self.span.classification },
            TableRow { label: "Span F1 (identification)".into(), report: &self.span.identification },
            TableRow { label: "Head F1 (classification)".into(), report: &self.head.classification },
            TableRow { label: "Head F1 (identification)".into(), report: &self.head.identification },
        ];
        if let Some(c) = &self.coref {
            rows.push(TableRow { label: "Coref F1 (classification)".into(), report: &c.classification });
            rows.push(TableRow { label: "Coref F1 (identification)".into(), report: &c.identification });
        }
        let mut out = render_table("Scores", &rows);
        let bins: Vec<TableRow> = self
            .distance
            .iter()
            .map(|(d, r)| TableRow { label: format!("d={d}"), report: r })
            .collect();
        out.push('\n');
        out.push_str(&render_table("Span F1 by trigger distance", &bins));
        out.push_str("\nErrors\n");
        for (c, n) in &self.errors {
            out.push_str(&format!("  {:<12} {n}\n", format!("{c:?}")));
        }
        out
    }
}
