//! Adapter for the native WikiEvents JSONL layout.
//!
//! Entity and trigger offsets there are 0-based with an exclusive end;
//! arguments point at entity mentions by id. Coreference clusters come
//! from a separate `*.jsonlines` file keyed by `doc_key`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::format::json_error;
use super::{AnnotatedDocument, Argument, Document, EventInstance, Span};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
struct WikiRecord {
    doc_id: String,
    tokens: Vec<String>,
    sentences: Vec<(Vec<serde_json::Value>, serde_json::Value)>,
    #[serde(default)]
    entity_mentions: Vec<WikiMention>,
    #[serde(default)]
    event_mentions: Vec<WikiEvent>,
}

#[derive(Debug, Deserialize)]
struct WikiMention {
    id: String,
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize)]
struct WikiEvent {
    event_type: String,
    trigger: WikiTrigger,
    arguments: Vec<WikiArgument>,
}

#[derive(Debug, Deserialize)]
struct WikiTrigger {
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize)]
struct WikiArgument {
    entity_id: String,
    role: String,
}

#[derive(Debug, Deserialize)]
struct CorefRecord {
    doc_key: String,
    clusters: Vec<Vec<String>>,
}

fn read_lines(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn exclusive(doc_id: &str, field: &str, start: usize, end: usize) -> Result<Span> {
    if end <= start {
        return Err(Error::malformed(
            doc_id,
            field,
            format!("empty offsets [{start},{end})"),
        ));
    }
    Ok(Span::new(start, end - 1))
}

/// Read WikiEvents documents, optionally attaching entity coreference
/// clusters from `coref_path`.
pub fn read_wikievents(path: &Path, coref_path: Option<&Path>) -> Result<Vec<AnnotatedDocument>> {
    let mut clusters: HashMap<String, Vec<Vec<String>>> = HashMap::new();
    if let Some(cp) = coref_path {
        let text = read_lines(cp)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: CorefRecord =
                serde_json::from_str(line).map_err(|e| json_error(cp, i + 1, line, e))?;
            clusters.insert(rec.doc_key, rec.clusters);
        }
    }

    let text = read_lines(path)?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: WikiRecord =
            serde_json::from_str(line).map_err(|e| json_error(path, i + 1, line, e))?;
        let doc_clusters = clusters.remove(&rec.doc_id);
        docs.push(convert(rec, doc_clusters)?);
    }
    Ok(docs)
}

fn convert(rec: WikiRecord, clusters: Option<Vec<Vec<String>>>) -> Result<AnnotatedDocument> {
    let id = rec.doc_id.as_str();
    let mut sentence_bounds = Vec::new();
    let mut next = 0;
    for (tokens, _) in &rec.sentences {
        if tokens.is_empty() {
            continue;
        }
        sentence_bounds.push(Span::new(next, next + tokens.len() - 1));
        next += tokens.len();
    }
    if next != rec.tokens.len() {
        return Err(Error::malformed(
            id,
            "sentences",
            format!("sentences hold {next} tokens, document has {}", rec.tokens.len()),
        ));
    }

    let mut mentions = HashMap::new();
    for m in &rec.entity_mentions {
        mentions.insert(m.id.as_str(), exclusive(id, "entity_mentions", m.start, m.end)?);
    }

    let mut events = Vec::new();
    for ev in &rec.event_mentions {
        let trigger = exclusive(id, "event_mentions.trigger", ev.trigger.start, ev.trigger.end)?;
        let mut arguments = Vec::new();
        for arg in &ev.arguments {
            let span = *mentions.get(arg.entity_id.as_str()).ok_or_else(|| {
                Error::malformed(
                    id,
                    "event_mentions.arguments",
                    format!("unknown entity {}", arg.entity_id),
                )
            })?;
            arguments.push(Argument {
                role: arg.role.clone(),
                span,
            });
        }
        events.push(EventInstance {
            event_type: ev.event_type.clone(),
            trigger,
            arguments,
        });
    }

    let coref_clusters = clusters.map(|cs| {
        cs.iter()
            .map(|c| {
                c.iter()
                    .filter_map(|m| mentions.get(m.as_str()).copied())
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect()
    });

    let doc = AnnotatedDocument {
        document: Document {
            doc_id: rec.doc_id.clone(),
            words: rec.tokens,
            sentence_bounds,
            dep_parents: None,
            coref_clusters,
            amr: None,
            source_id: None,
        },
        events,
    };
    doc.validate()?;
    Ok(doc)
}
