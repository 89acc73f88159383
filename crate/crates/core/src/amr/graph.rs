use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{cluster_relation, AmrSentenceGraph, RelationCategory};
use crate::corpus::{AnnotatedDocument, Document, Span};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    /// Node id in the source sentence graph.
    pub amr_id: u32,
    pub span: Option<Span>,
    pub sentence: usize,
}

/// Document-level graph with nodes renumbered densely from zero and one
/// undirected neighbour set per relation category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    pub nodes: Vec<GraphNode>,
    /// `neighbors[k][u]` is N_k(u); never contains `u` itself.
    pub neighbors: Vec<Vec<BTreeSet<usize>>>,
    /// One root per sentence that has any nodes.
    pub roots: Vec<usize>,
}

impl InteractionGraph {
    pub fn empty() -> Self {
        InteractionGraph {
            nodes: Vec::new(),
            neighbors: vec![Vec::new(); RelationCategory::COUNT],
            roots: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, category: RelationCategory, u: usize) -> &BTreeSet<usize> {
        &self.neighbors[category.id()][u]
    }

    /// Undirected edges `(u, v)` with `u < v` stored under `category`.
    pub fn edges(&self, category: RelationCategory) -> Vec<(usize, usize)> {
        self.neighbors[category.id()]
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    /// Categories that have at least one edge.
    pub fn active_categories(&self) -> Vec<RelationCategory> {
        RelationCategory::ALL
            .into_iter()
            .filter(|k| self.neighbors[k.id()].iter().any(|ns| !ns.is_empty()))
            .collect()
    }

    fn connect(&mut self, category: RelationCategory, u: usize, v: usize) {
        if u == v {
            return;
        }
        let k = category.id();
        self.neighbors[k][u].insert(v);
        self.neighbors[k][v].insert(u);
    }

    /// Word indices covered by at least one aligned node.
    pub fn aligned_spans(&self) -> impl Iterator<Item = Span> + '_ {
        self.nodes.iter().filter_map(|n| n.span)
    }
}

fn sentence_graphs(doc: &Document) -> Vec<AmrSentenceGraph> {
    match &doc.amr {
        Some(gs) => gs.clone(),
        None => vec![AmrSentenceGraph::default(); doc.num_sentences()],
    }
}

/// Union of the per-sentence AMR graphs with no edges between sentences.
///
/// A document without AMR yields an empty graph.
pub fn build_local_graph(doc: &Document) -> Result<InteractionGraph> {
    let graphs = sentence_graphs(doc);
    let mut out = InteractionGraph::empty();
    for (s, g) in graphs.iter().enumerate() {
        g.validate(&doc.doc_id, s, doc.sentence_bounds[s])?;
        let base = out.nodes.len();
        let mut local: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, node) in g.nodes.iter().enumerate() {
            local.insert(node.id, base + i);
            out.nodes.push(GraphNode {
                amr_id: node.id,
                span: node.span,
                sentence: s,
            });
        }
        for ns in &mut out.neighbors {
            ns.resize(out.nodes.len(), BTreeSet::new());
        }
        for edge in &g.edges {
            out.connect(cluster_relation(&edge.label), local[&edge.src], local[&edge.dst]);
        }
        if let Some(r) = g.root {
            out.roots.push(local[&r]);
        }
    }
    Ok(out)
}

/// The local graph plus a `RootLink` edge between every pair of sentence
/// roots.
pub fn build_global_graph(doc: &Document) -> Result<InteractionGraph> {
    let mut g = build_local_graph(doc)?;
    let roots = g.roots.clone();
    for (i, &a) in roots.iter().enumerate() {
        for &b in &roots[i + 1..] {
            g.connect(RelationCategory::RootLink, a, b);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

/// Share of gold argument spans overlapping at least one aligned node.
pub fn argument_coverage<'a>(
    items: impl IntoIterator<Item = (&'a AnnotatedDocument, &'a InteractionGraph)>,
) -> Coverage {
    let mut cov = Coverage { covered: 0, total: 0 };
    for (doc, graph) in items {
        for arg in doc.events.iter().flat_map(|e| &e.arguments) {
            cov.total += 1;
            if graph.aligned_spans().any(|s| s.overlaps(&arg.span)) {
                cov.covered += 1;
            }
        }
    }
    cov
}
