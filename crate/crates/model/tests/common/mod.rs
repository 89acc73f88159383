#![allow(dead_code)]

use std::collections::BTreeSet;

use docarg_core::amr::{AmrEdge, AmrNode, AmrSentenceGraph, GraphNode, InteractionGraph};
use docarg_core::corpus::{AnnotatedDocument, Argument, Document, EventInstance, Schema, Span};
use docarg_model::config::{ModelConfig, Precision};
use docarg_model::ArgumentModel;

pub fn graph(spans: &[Option<(usize, usize)>], edges: &[(usize, usize, usize)]) -> InteractionGraph {
    let mut g = InteractionGraph::empty();
    for (i, s) in spans.iter().enumerate() {
        g.nodes.push(GraphNode {
            amr_id: i as u32,
            span: s.map(|(a, b)| Span::new(a, b)),
            sentence: 0,
        });
    }
    for ns in &mut g.neighbors {
        ns.resize(spans.len(), BTreeSet::new());
    }
    for &(k, u, v) in edges {
        if u != v {
            g.neighbors[k][u].insert(v);
            g.neighbors[k][v].insert(u);
        }
    }
    g
}

fn amr(nodes: &[(u32, usize, usize)], edges: &[(u32, u32, &str)]) -> AmrSentenceGraph {
    AmrSentenceGraph {
        nodes: nodes
            .iter()
            .map(|&(id, a, b)| AmrNode { id, span: Some(Span::new(a, b)) })
            .collect(),
        edges: edges
            .iter()
            .map(|&(src, dst, l)| AmrEdge { src, dst, label: l.into() })
            .collect(),
        root: nodes.first().map(|n| n.0),
    }
}

/// Three sentences of four words; trigger at word 5 (second sentence).
pub fn three_sentence_doc() -> AnnotatedDocument {
    let words: Vec<String> = "rebels took the town . troops attacked it again . aid arrived later today"
        .split(' ')
        .map(String::from)
        .collect();
    let words: Vec<String> = words.into_iter().filter(|w| w != ".").collect();
    AnnotatedDocument {
        document: Document {
            doc_id: "toy-3".into(),
            words,
            sentence_bounds: vec![Span::new(0, 3), Span::new(4, 7), Span::new(8, 11)],
            dep_parents: Some(vec![
                Some(1), None, Some(3), Some(1),
                Some(5), None, Some(5), Some(5),
                Some(9), None, Some(9), Some(9),
            ]),
            coref_clusters: Some(vec![vec![Span::new(2, 3), Span::single(6)]]),
            amr: Some(vec![
                amr(&[(0, 1, 1), (1, 0, 0), (2, 3, 3)], &[(0, 1, ":ARG0"), (0, 2, ":ARG1")]),
                amr(&[(0, 5, 5), (1, 4, 4), (2, 6, 6)], &[(0, 1, ":ARG0"), (0, 2, ":ARG1")]),
                amr(&[(0, 9, 9), (1, 8, 8), (2, 10, 11)], &[(0, 1, ":ARG1"), (0, 2, ":time")]),
            ]),
            source_id: None,
        },
        events: vec![EventInstance {
            event_type: "conflict.attack".into(),
            trigger: Span::single(5),
            arguments: vec![
                Argument { role: "attacker".into(), span: Span::single(4) },
                Argument { role: "target".into(), span: Span::single(6) },
                Argument { role: "place".into(), span: Span::new(2, 3) },
            ],
        }],
    }
}

pub fn single_sentence_doc() -> AnnotatedDocument {
    AnnotatedDocument {
        document: Document {
            doc_id: "toy-1".into(),
            words: "troops attacked the town".split(' ').map(String::from).collect(),
            sentence_bounds: vec![Span::new(0, 3)],
            dep_parents: Some(vec![Some(1), None, Some(3), Some(1)]),
            coref_clusters: None,
            amr: Some(vec![amr(&[(0, 1, 1), (1, 0, 0), (2, 2, 3)], &[(0, 1, ":ARG0"), (0, 2, ":ARG1")])]),
            source_id: None,
        },
        events: vec![EventInstance {
            event_type: "conflict.attack".into(),
            trigger: Span::single(1),
            arguments: vec![
                Argument { role: "attacker".into(), span: Span::single(0) },
                Argument { role: "target".into(), span: Span::new(2, 3) },
            ],
        }],
    }
}

pub fn tiny_config(d: usize, layers: usize, precision: Precision) -> ModelConfig {
    let mut cfg = ModelConfig::default();
    cfg.encoder.hidden_dim = d;
    cfg.encoder.layers = layers;
    cfg.encoder.heads = 2;
    cfg.encoder.intermediate_dim = 2 * d;
    cfg.encoder.max_positions = 64;
    cfg.interaction.layers = 2;
    cfg.head.d_type = 4;
    cfg.head.d_len = 4;
    cfg.head.max_span_len = 3;
    cfg.precision = precision;
    cfg
}

pub fn model_for(docs: &[AnnotatedDocument], cfg: ModelConfig, seed: u64) -> ArgumentModel {
    let schema = Schema::from_corpus(docs);
    ArgumentModel::initialise(cfg, schema, docs, None, seed).unwrap()
}

pub fn rows(t: &candle_core::Tensor) -> Vec<Vec<f64>> {
    t.to_dtype(candle_core::DType::F64).unwrap().to_vec2().unwrap()
}
