//! Randomized prediction/gold draws and brute-force reference matchers,
//! shared by the scorer tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeMap;

use docarg_core::corpus::{Argument, Document, EventInstance, Span};
use docarg_core::metrics::{
    coref_f1, error_taxonomy, head_f1, span_f1, Counts, ErrorCategory, EvalItem, HeadRule, ScoredArgument,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DRAWS: u64 = 1000;
const ROLES: [&str; 3] = ["a", "b", "c"];

pub struct Draw {
    pub doc: Document,
    pub events: Vec<EventInstance>,
    pub preds: Vec<Vec<ScoredArgument>>,
}

fn random_span(rng: &mut ChaCha8Rng, bounds: &[Span]) -> Span {
    let b = bounds[rng.gen_range(0..bounds.len())];
    let start = rng.gen_range(b.start..=b.end);
    let end = rng.gen_range(start..=b.end.min(start + 2));
    Span::new(start, end)
}

pub fn draw(seed: u64) -> Draw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sent = rng.gen_range(1..=3);
    let mut bounds = Vec::new();
    let mut parents = Vec::new();
    let mut n = 0;
    for _ in 0..n_sent {
        let len = rng.gen_range(2..=5);
        let words: Vec<usize> = (n..n + len).collect();
        let mut order = words.clone();
        order.shuffle(&mut rng);
        let mut p = vec![None; len];
        for k in 1..len {
            p[order[k] - n] = Some(order[rng.gen_range(0..k)]);
        }
        parents.extend(p);
        bounds.push(Span::new(n, n + len - 1));
        n += len;
    }

    // disjoint clusters over distinct spans
    let mut pool: Vec<Span> = (0..8).map(|_| random_span(&mut rng, &bounds)).collect();
    pool.sort();
    pool.dedup();
    pool.shuffle(&mut rng);
    let mut clusters: Vec<Vec<Span>> = Vec::new();
    for s in pool {
        if !clusters.is_empty() && rng.gen_bool(0.5) {
            let i = rng.gen_range(0..clusters.len());
            clusters[i].push(s);
        } else {
            clusters.push(vec![s]);
        }
    }

    let doc = Document {
        doc_id: format!("d{seed}"),
        words: (0..n).map(|i| format!("w{i}")).collect(),
        sentence_bounds: bounds.clone(),
        dep_parents: Some(parents),
        coref_clusters: if rng.gen_bool(0.8) { Some(clusters.clone()) } else { None },
        amr: None,
        source_id: None,
    };
    doc.validate().unwrap();

    let mut events = Vec::new();
    let mut preds = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let golds: Vec<Argument> = (0..rng.gen_range(0..=4))
            .map(|_| Argument {
                role: ROLES.choose(&mut rng).unwrap().to_string(),
                span: random_span(&mut rng, &bounds),
            })
            .collect();
        let mut ps = Vec::new();
        for _ in 0..rng.gen_range(0..=5) {
            let (role, span) = match rng.gen_range(0..4) {
                0 if !golds.is_empty() => {
                    let g = golds.choose(&mut rng).unwrap();
                    (g.role.clone(), g.span)
                }
                1 if !clusters.is_empty() => {
                    let c = clusters.choose(&mut rng).unwrap();
                    (ROLES.choose(&mut rng).unwrap().to_string(), *c.choose(&mut rng).unwrap())
                }
                _ => (ROLES.choose(&mut rng).unwrap().to_string(), random_span(&mut rng, &bounds)),
            };
            // coarse scores so ties occur
            ps.push(ScoredArgument { role, span, score: rng.gen_range(0..4) as f64 / 4.0 });
        }
        events.push(EventInstance {
            event_type: "e".into(),
            trigger: random_span(&mut rng, &bounds),
            arguments: golds,
        });
        preds.push(ps);
    }
    Draw { doc, events, preds }
}

pub fn items(d: &Draw) -> Vec<EvalItem<'_>> {
    d.events
        .iter()
        .zip(&d.preds)
        .map(|(event, ps)| EvalItem { doc: &d.doc, event, predictions: ps })
        .collect()
}

/// Maximum bipartite matching by exhaustive search.
fn max_matching(np: usize, ng: usize, compatible: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(i: usize, np: usize, used: &mut Vec<bool>, c: &dyn Fn(usize, usize) -> bool) -> usize {
        if i == np {
            return 0;
        }
        let mut best = go(i + 1, np, used, c);
        for g in 0..used.len() {
            if !used[g] && c(i, g) {
                used[g] = true;
                best = best.max(1 + go(i + 1, np, used, c));
                used[g] = false;
            }
        }
        best
    }
    go(0, np, &mut vec![false; ng], compatible)
}

/// Word of the span with the fewest steps to its root, lowest index on ties.
fn oracle_head(parents: &[Option<usize>], span: Span) -> usize {
    let depth = |mut i: usize| {
        let mut d = 0;
        while let Some(p) = parents[i] {
            i = p;
            d += 1;
        }
        d
    };
    let mut best = span.start;
    for i in span.start..=span.end {
        if depth(i) < depth(best) {
            best = i;
        }
    }
    best
}

fn oracle_counts(d: &Draw, ignore_roles: bool, matcher: &dyn Fn(&Document, &ScoredArgument, &Argument) -> bool) -> Counts {
    let mut c = Counts::default();
    for (event, ps) in d.events.iter().zip(&d.preds) {
        let golds = &event.arguments;
        let tp = max_matching(ps.len(), golds.len(), &|p, g| {
            (ignore_roles || ps[p].role == golds[g].role) && matcher(&d.doc, &ps[p], &golds[g])
        });
        c.tp += tp;
        c.fp += ps.len() - tp;
        c.fn_ += golds.len() - tp;
    }
    c
}

fn exact(_: &Document, p: &ScoredArgument, g: &Argument) -> bool {
    p.span == g.span
}

fn same_head(doc: &Document, p: &ScoredArgument, g: &Argument) -> bool {
    let parents = doc.dep_parents.as_ref().unwrap();
    oracle_head(parents, p.span) == oracle_head(parents, g.span)
}

fn coreferent(doc: &Document, p: &ScoredArgument, g: &Argument) -> bool {
    p.span == g.span
        || doc
            .coref_clusters
            .iter()
            .flatten()
            .any(|c| c.contains(&p.span) && c.contains(&g.span))
}

fn oracle_category(p: &ScoredArgument, golds: &[Argument]) -> Vec<ErrorCategory> {
    let wrong_role = golds.iter().any(|g| g.span == p.span && g.role != p.role);
    let same: Vec<Span> = golds.iter().filter(|g| g.role == p.role).map(|g| g.span).collect();
    let inside = |g: &Span| g.start <= p.span.start && p.span.end <= g.end && *g != p.span;
    let touches = |g: &Span| p.span.start <= g.end && g.start <= p.span.end;
    let flags = [
        (ErrorCategory::WrongRole, wrong_role),
        (ErrorCategory::OverExtract, !wrong_role && same.is_empty()),
        (ErrorCategory::Partial, !wrong_role && same.iter().any(inside)),
        (ErrorCategory::Overlap, !wrong_role && !same.iter().any(inside) && same.iter().any(touches)),
        (ErrorCategory::WrongSpan, !wrong_role && !same.is_empty() && !same.iter().any(touches)),
    ];
    flags.into_iter().filter(|f| f.1).map(|f| f.0).collect()
}

/// Every scorer against brute-force maximum matching on draw `seed`.
pub fn check_scorers(seed: u64) {
    let d = draw(seed);
    let its = items(&d);
    for ignore in [false, true] {
        let span = span_f1(&its, ignore);
        let head = head_f1(&its, HeadRule::Dependency, ignore).unwrap();
        let coref = coref_f1(&its, ignore);
        assert_eq!(span.counts, oracle_counts(&d, ignore, &exact), "span seed {seed}");
        assert_eq!(head.counts, oracle_counts(&d, ignore, &same_head), "head seed {seed}");
        assert_eq!(coref.counts, oracle_counts(&d, ignore, &coreferent), "coref seed {seed}");
        assert!(head.f1 >= span.f1, "seed {seed}: head {} < span {}", head.f1, span.f1);
        assert!(coref.counts.tp >= span.counts.tp, "seed {seed}");
    }
}

/// Taxonomy counts partition the false positives of draw `seed`, each
/// category agreeing with an independent predicate set.
pub fn check_taxonomy(seed: u64) {
    let d = draw(seed);
    let its = items(&d);
    let report = error_taxonomy(&its);
    let fp = span_f1(&its, false).counts.fp;
    assert_eq!(report.total, fp, "seed {seed}");
    assert_eq!(report.counts.values().sum::<usize>(), fp, "seed {seed}");
    assert_eq!(report.counts.len(), 5);
    for it in &its {
        let single = error_taxonomy(std::slice::from_ref(it));
        for ex in &single.examples {
            let cats = oracle_category(&ex.prediction, &it.event.arguments);
            assert_eq!(cats, vec![ex.category], "seed {seed}");
        }
        // unmatched predictions form the multiset difference preds - golds
        let mut remaining: BTreeMap<(String, Span), usize> = BTreeMap::new();
        for p in it.predictions {
            *remaining.entry((p.role.clone(), p.span)).or_default() += 1;
        }
        for g in &it.event.arguments {
            if let Some(c) = remaining.get_mut(&(g.role.clone(), g.span)) {
                *c = c.saturating_sub(1);
            }
        }
        let mut got: BTreeMap<(String, Span), usize> = BTreeMap::new();
        for ex in &single.examples {
            *got.entry((ex.prediction.role.clone(), ex.prediction.span)).or_default() += 1;
        }
        remaining.retain(|_, c| *c > 0);
        assert_eq!(got, remaining, "seed {seed}");
    }
}

