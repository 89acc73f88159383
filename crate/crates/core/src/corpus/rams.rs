//! Adapter for the native RAMS v1.0 JSONL layout.
//!
//! Each line carries tokenized `sentences`, `evt_triggers` as
//! `[start, end, [[type, prob], ...]]` and `gold_evt_links` as
//! `[[trigger_start, trigger_end], [arg_start, arg_end], "evtNNNargNNrole"]`,
//! all 0-based inclusive over the concatenated sentences.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::format::json_error;
use super::{AnnotatedDocument, Argument, Document, EventInstance, Span};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
struct RamsRecord {
    doc_key: String,
    sentences: Vec<Vec<String>>,
    evt_triggers: Vec<(usize, usize, Vec<(String, f64)>)>,
    gold_evt_links: Vec<(Span, Span, String)>,
    #[serde(default)]
    source_url: Option<String>,
}

/// Strip the `evtNNNargNN` prefix RAMS puts in front of role names.
pub(crate) fn rams_role(label: &str) -> &str {
    static PREFIX: OnceLock<Regex> = OnceLock::new();
    let re = PREFIX.get_or_init(|| Regex::new(r"^evt\d+arg\d+").unwrap());
    match re.find(label) {
        Some(m) => &label[m.end()..],
        None => label,
    }
}

pub fn read_rams(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RamsRecord =
            serde_json::from_str(line).map_err(|e| json_error(path, i + 1, line, e))?;
        docs.push(convert(rec)?);
    }
    Ok(docs)
}

fn convert(rec: RamsRecord) -> Result<AnnotatedDocument> {
    let mut words = Vec::new();
    let mut sentence_bounds = Vec::new();
    for sent in rec.sentences {
        if sent.is_empty() {
            continue;
        }
        let start = words.len();
        words.extend(sent);
        sentence_bounds.push(Span::new(start, words.len() - 1));
    }

    let mut events = Vec::new();
    for (start, end, types) in &rec.evt_triggers {
        let trigger = Span::new(*start, *end);
        let event_type = types
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|t| t.0.clone())
            .ok_or_else(|| Error::malformed(&rec.doc_key, "evt_triggers", "trigger without a type"))?;
        let arguments = rec
            .gold_evt_links
            .iter()
            .filter(|(t, _, _)| *t == trigger)
            .map(|(_, span, label)| Argument {
                role: rams_role(label).to_string(),
                span: *span,
            })
            .collect();
        events.push(EventInstance {
            event_type,
            trigger,
            arguments,
        });
    }
    for (t, _, _) in &rec.gold_evt_links {
        if !events.iter().any(|e| e.trigger == *t) {
            return Err(Error::malformed(
                &rec.doc_key,
                "gold_evt_links",
                format!("link refers to unknown trigger {t}"),
            ));
        }
    }

    let doc = AnnotatedDocument {
        document: Document {
            doc_id: rec.doc_key,
            words,
            sentence_bounds,
            dep_parents: None,
            coref_clusters: None,
            amr: None,
            source_id: rec.source_url,
        },
        events,
    };
    doc.validate()?;
    Ok(doc)
}
