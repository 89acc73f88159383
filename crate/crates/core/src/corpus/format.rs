//! The normalized JSONL corpus format, one document per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedDocument, Argument, Document, EventInstance, Span};
use crate::amr::AmrSentenceGraph;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    doc_id: String,
    words: Vec<String>,
    sentence_bounds: Vec<Span>,
    dep_parents: Option<Vec<i64>>,
    coref_clusters: Option<Vec<Vec<Span>>>,
    events: Vec<EventRecord>,
    amr: Option<Vec<AmrSentenceGraph>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    event_type: String,
    trigger: Span,
    arguments: Vec<Argument>,
}

impl DocumentRecord {
    fn into_document(self) -> Result<AnnotatedDocument> {
        let dep_parents = match self.dep_parents {
            None => None,
            Some(ps) => Some(
                ps.into_iter()
                    .map(|p| match p {
                        -1 => Ok(None),
                        p if p >= 0 => Ok(Some(p as usize)),
                        p => Err(Error::malformed(
                            &self.doc_id,
                            "dep_parents",
                            format!("invalid parent {p}"),
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let events = self
            .events
            .into_iter()
            .map(|e| EventInstance {
                event_type: e.event_type,
                trigger: e.trigger,
                arguments: e.arguments,
            })
            .collect();
        Ok(AnnotatedDocument {
            document: Document {
                doc_id: self.doc_id,
                words: self.words,
                sentence_bounds: self.sentence_bounds,
                dep_parents,
                coref_clusters: self.coref_clusters,
                amr: self.amr,
                source_id: self.source_id,
            },
            events,
        })
    }

    fn from_document(doc: &AnnotatedDocument) -> Self {
        let d = &doc.document;
        DocumentRecord {
            doc_id: d.doc_id.clone(),
            words: d.words.clone(),
            sentence_bounds: d.sentence_bounds.clone(),
            dep_parents: d
                .dep_parents
                .as_ref()
                .map(|ps| ps.iter().map(|p| p.map_or(-1, |p| p as i64)).collect()),
            coref_clusters: d.coref_clusters.clone(),
            events: doc
                .events
                .iter()
                .map(|e| EventRecord {
                    event_type: e.event_type.clone(),
                    trigger: e.trigger,
                    arguments: e.arguments.clone(),
                })
                .collect(),
            amr: d.amr.clone(),
            source_id: d.source_id.clone(),
        }
    }
}

pub fn read_normalized(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_lines(&text, path)
}

/// Parse normalized JSONL held in memory. Documents are validated but not
/// reordered.
pub fn read_normalized_str(text: &str) -> Result<Vec<AnnotatedDocument>> {
    parse_lines(text, Path::new("<memory>"))
}

fn parse_lines(text: &str, path: &Path) -> Result<Vec<AnnotatedDocument>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord =
            serde_json::from_str(line).map_err(|source| json_error(path, i + 1, line, source))?;
        let doc = record.into_document()?;
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Attach the record's `doc_id`, when it can be recovered, to a parse error.
pub(crate) fn json_error(path: &Path, line: usize, text: &str, source: serde_json::Error) -> Error {
    let doc_id = serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| {
            ["doc_id", "doc_key"]
                .iter()
                .find_map(|k| v.get(k).and_then(|d| d.as_str()).map(String::from))
        });
    Error::Json {
        path: path.to_path_buf(),
        line,
        doc_id,
        source,
    }
}

pub fn write_normalized_string(docs: &[AnnotatedDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        let record = DocumentRecord::from_document(doc);
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_normalized(path: impl AsRef<Path>, docs: &[AnnotatedDocument]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_normalized_string(docs)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_DOC: &str = r#"{"doc_id":"d1","words":["Rebels","attacked","the","town","."],"sentence_bounds":[[0,4]],"dep_parents":[1,-1,3,1,1],"coref_clusters":null,"events":[{"event_type":"conflict.attack","trigger":[1,1],"arguments":[{"role":"attacker","span":[0,0]},{"role":"target","span":[2,3]}]}],"amr":null}"#;

    #[test]
    fn hand_written_document_round_trips() {
        let docs = read_normalized_str(ONE_DOC).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].events[0].arguments.len(), 2);
        assert_eq!(docs[0].document.dep_parents.as_ref().unwrap()[1], None);
        let written = write_normalized_string(&docs);
        assert_eq!(written.trim_end(), ONE_DOC);
        assert_eq!(read_normalized_str(&written).unwrap(), docs);
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(read_normalized_str("").unwrap().is_empty());
        assert!(read_normalized_str("\n\n").unwrap().is_empty());
    }

    #[test]
    fn out_of_range_span_names_document() {
        let bad = ONE_DOC.replace("[2,3]", "[2,9]");
        let err = read_normalized_str(&bad).unwrap_err();
        assert!(matches!(&err, Error::SpanOutOfRange { doc_id, .. } if doc_id == "d1"));
    }

    #[test]
    fn malformed_record_names_line_and_document() {
        let err = read_normalized_str(&format!("{ONE_DOC}\n{{\"doc_id\": 3}}")).unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");
        let bad = ONE_DOC.replace("\"words\"", "\"wrds\"");
        let err = read_normalized_str(&bad).unwrap_err().to_string();
        assert!(err.contains("d1") && err.contains("wrds"), "{err}");
    }
}
