use std::path::PathBuf;

use crate::corpus::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: invalid record{}: {source}", doc_id.as_ref().map(|d| format!(" for document {d}")).unwrap_or_default())]
    Json {
        path: PathBuf,
        line: usize,
        doc_id: Option<String>,
        #[source]
        source: serde_json::Error,
    },

    #[error("document {doc_id}: malformed field `{field}`: {reason}")]
    Malformed {
        doc_id: String,
        field: String,
        reason: String,
    },

    #[error("document {doc_id}: span {span} in `{field}` lies outside the document ({len} words)")]
    SpanOutOfRange {
        doc_id: String,
        field: String,
        span: Span,
        len: usize,
    },

    #[error("unknown labels (event types: {event_types:?}; roles: {roles:?})")]
    UnknownLabels {
        event_types: Vec<String>,
        roles: Vec<String>,
    },

    #[error("word index {index} out of range for document of {len} words")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(
        "document {doc_id} has no dependency parse; supply `dep_parents` or enable the span-end head fallback"
    )]
    MissingDependencies { doc_id: String },

    #[error("document {doc_id}: span {span} crosses a sentence boundary")]
    CrossSentenceSpan { doc_id: String, span: Span },

    #[error("document {doc_id}, sentence {sentence}: AMR node {node} {reason}")]
    AmrNode {
        doc_id: String,
        sentence: usize,
        node: u32,
        reason: String,
    },

    #[error("document {doc_id}: {reason}")]
    Amr { doc_id: String, reason: String },
}

impl Error {
    pub(crate) fn malformed(doc_id: &str, field: &str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            doc_id: doc_id.to_string(),
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
