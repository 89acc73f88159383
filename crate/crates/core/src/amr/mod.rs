//! Pre-parsed AMR graphs: storage, relation clustering and the interaction
//! graphs the model runs message passing over.

mod graph;
mod prepare;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Span;
use crate::{Error, Result};

pub use graph::{argument_coverage, build_global_graph, build_local_graph, Coverage, GraphNode, InteractionGraph};
pub use prepare::{merge_parses, read_jamr, read_parsed_jsonl, MergeReport, ParsedSentence};

/// One sentence's AMR as produced by an external aligner-parser. Alignment
/// spans are document-level word indices; `span: null` marks an unaligned
/// concept.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AmrSentenceGraph {
    pub nodes: Vec<AmrNode>,
    pub edges: Vec<AmrEdge>,
    /// `None` only for an empty parse.
    pub root: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrNode {
    pub id: u32,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrEdge {
    pub src: u32,
    pub dst: u32,
    /// Parser-native label such as `:ARG0` or `:op2`.
    pub label: String,
}

impl AmrSentenceGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn validate(&self, doc_id: &str, sentence: usize, bounds: Span) -> Result<()> {
        let node_err = |node: u32, reason: &str| Error::AmrNode {
            doc_id: doc_id.to_string(),
            sentence,
            node,
            reason: reason.to_string(),
        };
        let mut ids = HashSet::new();
        for node in &self.nodes {
            if !ids.insert(node.id) {
                return Err(node_err(node.id, "is declared twice"));
            }
            if let Some(span) = node.span {
                if span.is_empty() || !bounds.covers(&span) {
                    return Err(node_err(
                        node.id,
                        &format!("alignment {span} escapes sentence bounds {bounds}"),
                    ));
                }
            }
        }
        match self.root {
            Some(r) if !ids.contains(&r) => return Err(node_err(r, "is the root but not a node")),
            None if !self.nodes.is_empty() => {
                return Err(Error::Amr {
                    doc_id: doc_id.to_string(),
                    reason: format!("sentence {sentence} has nodes but no root"),
                })
            }
            _ => {}
        }
        for edge in &self.edges {
            for end in [edge.src, edge.dst] {
                if !ids.contains(&end) {
                    return Err(node_err(end, &format!("is referenced by edge {}", edge.label)));
                }
            }
        }
        Ok(())
    }
}

/// Clustered AMR relation categories. Core roles keep individual categories;
/// `RootLink` is reserved for cross-sentence root connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationCategory {
    Spatial,
    Temporal,
    Means,
    Modifiers,
    Operators,
    Prepositions,
    Sentence,
    Arg0,
    Arg1,
    Arg2,
    Arg3,
    Arg4,
    Others,
    RootLink,
}

impl RelationCategory {
    pub const COUNT: usize = 14;

    pub const ALL: [RelationCategory; Self::COUNT] = [
        RelationCategory::Spatial,
        RelationCategory::Temporal,
        RelationCategory::Means,
        RelationCategory::Modifiers,
        RelationCategory::Operators,
        RelationCategory::Prepositions,
        RelationCategory::Sentence,
        RelationCategory::Arg0,
        RelationCategory::Arg1,
        RelationCategory::Arg2,
        RelationCategory::Arg3,
        RelationCategory::Arg4,
        RelationCategory::Others,
        RelationCategory::RootLink,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RelationCategory::Arg0 => "ARG0",
            RelationCategory::Arg1 => "ARG1",
            RelationCategory::Arg2 => "ARG2",
            RelationCategory::Arg3 => "ARG3",
            RelationCategory::Arg4 => "ARG4",
            other => return write!(f, "{other:?}"),
        };
        f.write_str(name)
    }
}

fn is_numbered(label: &str, prefix: &str) -> bool {
    label
        .strip_prefix(prefix)
        .map(|rest| rest.strip_prefix('-').unwrap_or(rest))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

/// Map a parser-native edge label onto its relation category.
///
/// Matching ignores case and a leading `:`. Inverse labels (`ARG0-of`,
/// `location-of`) fall into the category of their base relation.
pub fn cluster_relation(raw_label: &str) -> RelationCategory {
    use RelationCategory::*;
    let label = raw_label.trim().trim_start_matches(':').to_ascii_lowercase();
    if label.starts_with("prep-") {
        return Prepositions;
    }
    let base = match label.strip_suffix("-of") {
        Some(b) if !b.is_empty() => b,
        _ => label.as_str(),
    };
    match base {
        "location" | "destination" | "path" => Spatial,
        "year" | "time" | "duration" | "decade" | "weekday" => Temporal,
        "instrument" | "manner" | "topic" | "medium" => Means,
        "mod" | "poss" => Modifiers,
        "arg0" => Arg0,
        "arg1" => Arg1,
        "arg2" => Arg2,
        "arg3" => Arg3,
        "arg4" => Arg4,
        b if is_numbered(b, "op") => Operators,
        b if b == "snt" || is_numbered(b, "snt") => Sentence,
        _ => Others,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RelationCategory::*;

    #[test]
    fn spec_examples() {
        assert_eq!(cluster_relation(":location"), Spatial);
        assert_eq!(cluster_relation(":ARG0"), Arg0);
        assert_eq!(cluster_relation(":wiki"), Others);
        assert_eq!(cluster_relation(":op3"), Operators);
    }

    #[test]
    fn pattern_labels() {
        assert_eq!(cluster_relation(":prep-against"), Prepositions);
        assert_eq!(cluster_relation(":prep-on-behalf-of"), Prepositions);
        assert_eq!(cluster_relation(":snt2"), Sentence);
        assert_eq!(cluster_relation(":ARG1-of"), Arg1);
        assert_eq!(cluster_relation(":ARG5"), Others);
        assert_eq!(cluster_relation(":opinion"), Others);
        assert_eq!(cluster_relation(":op"), Others);
        assert_eq!(cluster_relation(":-of"), Others);
        assert_eq!(cluster_relation(""), Others);
    }

    #[test]
    fn category_ids_are_dense() {
        for (i, c) in RelationCategory::ALL.iter().enumerate() {
            assert_eq!(c.id(), i);
            assert_eq!(RelationCategory::from_id(i), Some(*c));
        }
        assert_eq!(RelationCategory::from_id(14), None);
    }

    #[test]
    fn validation_names_offending_node() {
        let g = AmrSentenceGraph {
            nodes: vec![
                AmrNode { id: 1, span: Some(Span::new(0, 1)) },
                AmrNode { id: 7, span: Some(Span::new(2, 4)) },
            ],
            edges: vec![],
            root: Some(1),
        };
        let err = g.validate("d", 0, Span::new(0, 3)).unwrap_err();
        assert!(matches!(err, Error::AmrNode { node: 7, .. }), "{err}");

        let g = AmrSentenceGraph {
            nodes: vec![AmrNode { id: 1, span: None }],
            edges: vec![AmrEdge { src: 1, dst: 2, label: ":ARG0".into() }],
            root: Some(1),
        };
        assert!(g.validate("d", 0, Span::new(0, 3)).is_err());
    }
}
