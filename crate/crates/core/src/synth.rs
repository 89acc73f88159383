//! Seeded generator of small synthetic corpora with dependency trees and
//! aligned AMR graphs. Used by tests, smoke runs and the `synth` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amr::{AmrEdge, AmrNode, AmrSentenceGraph};
use crate::corpus::{AnnotatedDocument, Argument, Document, EventInstance, Span};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub documents: usize,
    pub sentences: (usize, usize),
    pub sentence_len: (usize, usize),
    pub events_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 20,
            sentences: (2, 3),
            sentence_len: (5, 8),
            events_per_doc: 1,
            seed: 7,
        }
    }
}

/// Event type name, legal roles, and the AMR label tying each role to its
/// trigger.
const EVENT_TYPES: [(&str, &[(&str, &str)]); 2] = [
    ("conflict.attack", &[("attacker", ":ARG0"), ("target", ":ARG1"), ("place", ":location")]),
    ("movement.transport", &[("attacker", ":ARG0"), ("place", ":destination")]),
];

const FILLER_LABELS: [&str; 6] = [":mod", ":op1", ":time", ":poss", ":manner", ":wiki"];

fn argument_words(role: &str, k: usize, len: usize) -> Vec<String> {
    (0..len).map(|i| format!("{role}{k}_{i}")).collect()
}

/// Generate a corpus. Identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> Vec<AnnotatedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.documents)
        .map(|d| generate_doc(&mut rng, cfg, format!("synth-{d:03}")))
        .collect()
}

struct Slot {
    sentence: usize,
    words: Vec<String>,
    role: Option<(String, &'static str)>,
}

fn generate_doc(rng: &mut ChaCha8Rng, cfg: &SynthConfig, doc_id: String) -> AnnotatedDocument {
    let n_sent = rng.gen_range(cfg.sentences.0..=cfg.sentences.1);
    let mut sentences: Vec<Vec<String>> = (0..n_sent)
        .map(|_| {
            let len = rng.gen_range(cfg.sentence_len.0..=cfg.sentence_len.1);
            (0..len).map(|_| format!("f{}", rng.gen_range(0..40))).collect()
        })
        .collect();

    // plan triggers and arguments, then write them over filler words
    let mut planned: Vec<(usize, &'static str, Slot, Vec<Slot>)> = Vec::new();
    for _ in 0..cfg.events_per_doc {
        let ty = rng.gen_range(0..EVENT_TYPES.len());
        let (name, roles) = EVENT_TYPES[ty];
        let trigger = Slot {
            sentence: rng.gen_range(0..n_sent),
            words: vec![format!("trig{ty}")],
            role: None,
        };
        let n_args = rng.gen_range(1..=roles.len());
        let mut chosen: Vec<&(&str, &str)> = roles.choose_multiple(rng, n_args).collect();
        chosen.sort();
        let args = chosen
            .into_iter()
            .map(|(role, label)| {
                // arguments stay near the trigger
                let s = (trigger.sentence as i64 + rng.gen_range(-1..=1)).clamp(0, n_sent as i64 - 1);
                Slot {
                    sentence: s as usize,
                    words: argument_words(role, rng.gen_range(0..3), rng.gen_range(1..=2)),
                    role: Some((role.to_string(), label)),
                }
            })
            .collect();
        planned.push((ty, name, trigger, args));
    }

    // lay out: each slot takes distinct positions within its sentence
    let mut used: Vec<Vec<bool>> = sentences.iter().map(|s| vec![false; s.len()]).collect();
    let mut place = |rng: &mut ChaCha8Rng, slot: &Slot, sentences: &mut Vec<Vec<String>>| -> Option<(usize, usize)> {
        let s = slot.sentence;
        let len = slot.words.len();
        let starts: Vec<usize> = (0..=sentences[s].len().saturating_sub(len))
            .filter(|&i| (i..i + len).all(|j| j < used[s].len() && !used[s][j]))
            .collect();
        let &start = starts.choose(rng)?;
        for (j, w) in slot.words.iter().enumerate() {
            sentences[s][start + j] = w.clone();
            used[s][start + j] = true;
        }
        Some((s, start))
    };
    let mut placed = Vec::new();
    for (ty, name, trigger, args) in &planned {
        let Some(t) = place(rng, trigger, &mut sentences) else { continue };
        let mut arg_pos = Vec::new();
        for a in args {
            if let Some(p) = place(rng, a, &mut sentences) {
                arg_pos.push((p, a));
            }
        }
        placed.push((*ty, *name, t, arg_pos));
    }

    let mut words = Vec::new();
    let mut bounds = Vec::new();
    for s in &sentences {
        bounds.push(Span::new(words.len(), words.len() + s.len() - 1));
        words.extend(s.iter().cloned());
    }
    let abs = |(s, i): (usize, usize)| bounds[s].start + i;

    let mut events = Vec::new();
    // per-sentence AMR nodes: (span, label-to-trigger, is trigger)
    let mut amr_nodes: Vec<Vec<(Span, Option<&str>, bool)>> = vec![Vec::new(); n_sent];
    for (_, name, t, args) in &placed {
        let trig = Span::single(abs(*t));
        amr_nodes[t.0].push((trig, None, true));
        let mut arguments = Vec::new();
        for (p, slot) in args {
            let span = Span::new(abs(*p), abs(*p) + slot.words.len() - 1);
            let (role, label) = slot.role.clone().unwrap();
            amr_nodes[p.0].push((span, Some(label), false));
            arguments.push(Argument { role, span });
        }
        events.push(EventInstance {
            event_type: name.to_string(),
            trigger: trig,
            arguments,
        });
    }

    let amr = (0..n_sent)
        .map(|s| sentence_graph(rng, bounds[s], &amr_nodes[s]))
        .collect();
    let dep_parents = Some(bounds.iter().flat_map(|b| random_tree(rng, *b)).collect());

    AnnotatedDocument {
        document: Document {
            doc_id,
            words,
            sentence_bounds: bounds,
            dep_parents,
            coref_clusters: None,
            amr: Some(amr),
            source_id: None,
        },
        events,
    }
}

fn sentence_graph(rng: &mut ChaCha8Rng, bounds: Span, content: &[(Span, Option<&str>, bool)]) -> AmrSentenceGraph {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let root_pos = content.iter().position(|c| c.2);
    for (i, (span, _, _)) in content.iter().enumerate() {
        nodes.push(AmrNode { id: i as u32, span: Some(*span) });
    }
    // a couple of filler concepts, one occasionally unaligned
    let fillers = rng.gen_range(1..=2);
    for _ in 0..fillers {
        let id = nodes.len() as u32;
        let span = if rng.gen_bool(0.2) {
            None
        } else {
            Some(Span::single(rng.gen_range(bounds.start..=bounds.end)))
        };
        nodes.push(AmrNode { id, span });
    }
    let root = root_pos.unwrap_or(0) as u32;
    for (i, (_, label, is_trigger)) in content.iter().enumerate() {
        if *is_trigger || i as u32 == root {
            continue;
        }
        let label = match (root_pos, label) {
            (Some(_), Some(l)) => l.to_string(),
            _ => FILLER_LABELS.choose(rng).unwrap().to_string(),
        };
        edges.push(AmrEdge { src: root, dst: i as u32, label });
    }
    for id in content.len().max(1)..nodes.len() {
        let parent = rng.gen_range(0..id) as u32;
        edges.push(AmrEdge {
            src: parent,
            dst: id as u32,
            label: FILLER_LABELS.choose(rng).unwrap().to_string(),
        });
    }
    AmrSentenceGraph { nodes, edges, root: Some(root) }
}

fn random_tree(rng: &mut ChaCha8Rng, bounds: Span) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = bounds.words().collect();
    order.shuffle(rng);
    let mut parents = vec![None; bounds.len()];
    for k in 1..order.len() {
        let p = order[rng.gen_range(0..k)];
        parents[order[k] - bounds.start] = Some(p);
    }
    parents
}
