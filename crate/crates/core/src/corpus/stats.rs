use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnnotatedDocument;

/// Dataset size in the terms datasets are usually reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Distinct source documents (examples cut from one source count once).
    pub documents: usize,
    /// Records in the file.
    pub examples: usize,
    pub events: usize,
    pub arguments: usize,
}

impl CorpusStats {
    pub fn of(docs: &[AnnotatedDocument]) -> CorpusStats {
        let sources: BTreeSet<&str> = docs
            .iter()
            .map(|d| {
                d.document
                    .source_id
                    .as_deref()
                    .unwrap_or(d.document.doc_id.as_str())
            })
            .collect();
        CorpusStats {
            documents: sources.len(),
            examples: docs.len(),
            events: docs.iter().map(|d| d.events.len()).sum(),
            arguments: docs
                .iter()
                .flat_map(|d| &d.events)
                .map(|e| e.arguments.len())
                .sum(),
        }
    }
}

/// Gold arguments longer than `max_span_len`. They stay in the gold sets
/// (and can never be recalled); callers should warn when this is non-zero.
pub fn long_argument_count(docs: &[AnnotatedDocument], max_span_len: usize) -> usize {
    docs.iter()
        .flat_map(|d| &d.events)
        .flat_map(|e| &e.arguments)
        .filter(|a| a.span.len() > max_span_len)
        .count()
}
