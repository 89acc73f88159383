//! Merge an external parser's per-sentence output into corpus documents.
//!
//! Two inputs are understood:
//!
//! * JSONL, one sentence per line:
//!   `{"doc_id": str, "sentence_index": int, "graph": {"nodes", "edges", "root"}}`
//!   with alignment spans given as 0-based inclusive offsets *within the
//!   sentence*.
//! * JAMR-style alignment comments as written by transition-based aligners:
//!   blocks holding `# ::id DOC::SENT`, `# ::node\tID\tCONCEPT\tA-B`
//!   (exclusive end), `# ::root\tID\tCONCEPT` and
//!   `# ::edge\tSRC_CONCEPT\tLABEL\tDST_CONCEPT\tSRC_ID\tDST_ID` lines.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AmrEdge, AmrNode, AmrSentenceGraph};
use crate::corpus::{AnnotatedDocument, Span};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Alignments relative to the sentence start.
    pub graph: AmrSentenceGraph,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub attached: usize,
    /// `(doc_id, sentence)` pairs left with an empty graph.
    pub missing: Vec<(String, usize)>,
    /// Parses whose document or sentence does not exist.
    pub orphaned: Vec<(String, usize)>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_parsed_jsonl(path: &Path) -> Result<Vec<ParsedSentence>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| crate::corpus::format_json_error(path, i + 1, line, e))?,
        );
    }
    Ok(out)
}

pub fn read_jamr(path: &Path) -> Result<Vec<ParsedSentence>> {
    parse_jamr(&read(path)?)
}

pub(crate) fn parse_jamr(text: &str) -> Result<Vec<ParsedSentence>> {
    let mut out = Vec::new();
    for block in text.split("\n\n") {
        let mut id = None;
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut graph = AmrSentenceGraph::default();
        let intern = |raw: &str, ids: &mut HashMap<String, u32>| {
            let next = ids.len() as u32;
            *ids.entry(raw.to_string()).or_insert(next)
        };
        for line in block.lines() {
            let Some(rest) = line.strip_prefix("# ::") else {
                continue;
            };
            let fields: Vec<&str> = rest.split('\t').collect();
            match fields[0].split_whitespace().next().unwrap_or("") {
                "id" => id = rest.strip_prefix("id").map(|s| s.trim().to_string()),
                "node" if fields.len() >= 3 => {
                    let nid = intern(fields[1], &mut ids);
                    let span = fields.get(3).and_then(|r| {
                        let (a, b) = r.split_once('-')?;
                        let (a, b): (usize, usize) = (a.parse().ok()?, b.parse().ok()?);
                        (b > a).then(|| Span::new(a, b - 1))
                    });
                    graph.nodes.push(AmrNode { id: nid, span });
                }
                "root" if fields.len() >= 2 => graph.root = Some(intern(fields[1], &mut ids)),
                "edge" if fields.len() >= 6 => graph.edges.push(AmrEdge {
                    src: intern(fields[4], &mut ids),
                    dst: intern(fields[5], &mut ids),
                    label: format!(":{}", fields[2].trim_start_matches(':')),
                }),
                _ => {}
            }
        }
        let Some(id) = id else { continue };
        let (doc_id, sent) = id.rsplit_once("::").ok_or_else(|| Error::Amr {
            doc_id: id.clone(),
            reason: "`# ::id` must read DOC_ID::SENTENCE_INDEX".into(),
        })?;
        let sentence_index = sent.parse().map_err(|_| Error::Amr {
            doc_id: doc_id.to_string(),
            reason: format!("bad sentence index `{sent}`"),
        })?;
        out.push(ParsedSentence {
            doc_id: doc_id.to_string(),
            sentence_index,
            graph,
        });
    }
    Ok(out)
}

/// Attach parses to documents, shifting sentence-relative alignments to
/// document offsets. Sentences without a parse get an empty graph.
pub fn merge_parses(docs: &mut [AnnotatedDocument], parses: Vec<ParsedSentence>) -> Result<MergeReport> {
    let mut by_doc: BTreeMap<String, BTreeMap<usize, AmrSentenceGraph>> = BTreeMap::new();
    for p in parses {
        by_doc.entry(p.doc_id).or_default().insert(p.sentence_index, p.graph);
    }
    let mut report = MergeReport::default();
    for doc in docs.iter_mut() {
        let d = &mut doc.document;
        let mut parsed = by_doc.remove(&d.doc_id).unwrap_or_default();
        let mut graphs = Vec::with_capacity(d.num_sentences());
        for (s, bounds) in d.sentence_bounds.iter().enumerate() {
            match parsed.remove(&s) {
                Some(mut g) => {
                    for node in &mut g.nodes {
                        node.span = node
                            .span
                            .map(|sp| Span::new(sp.start + bounds.start, sp.end + bounds.start));
                    }
                    g.validate(&d.doc_id, s, *bounds)?;
                    report.attached += 1;
                    graphs.push(g);
                }
                None => {
                    report.missing.push((d.doc_id.clone(), s));
                    graphs.push(AmrSentenceGraph::default());
                }
            }
        }
        report
            .orphaned
            .extend(parsed.into_keys().map(|s| (d.doc_id.clone(), s)));
        d.amr = Some(graphs);
    }
    for (doc_id, sentences) in by_doc {
        report
            .orphaned
            .extend(sentences.into_keys().map(|s| (doc_id.clone(), s)));
    }
    Ok(report)
}
