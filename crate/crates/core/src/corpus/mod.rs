//! Documents, events, schemas and the span utilities built on them.

mod format;
mod rams;
mod stats;
mod wikievents;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amr::AmrSentenceGraph;
use crate::{Error, Result};

pub(crate) use format::json_error as format_json_error;
pub use format::{read_normalized, read_normalized_str, write_normalized, write_normalized_string};
pub use rams::read_rams;
pub use stats::{long_argument_count, CorpusStats};
pub use wikievents::read_wikievents;

/// Inclusive word span `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub const fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }

    /// Number of words covered. Zero only for an inverted (invalid) span.
    pub fn len(&self) -> usize {
        (self.end + 1).saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn covers(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn words(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub words: Vec<String>,
    /// Contiguous inclusive bounds covering every word exactly once.
    pub sentence_bounds: Vec<Span>,
    /// Parent of every word (document-level index), `None` for a sentence root.
    pub dep_parents: Option<Vec<Option<usize>>>,
    pub coref_clusters: Option<Vec<Vec<Span>>>,
    /// One graph per sentence.
    pub amr: Option<Vec<AmrSentenceGraph>>,
    /// Upstream document the example was cut from, when the dataset says so.
    pub source_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInstance {
    pub event_type: String,
    pub trigger: Span,
    pub arguments: Vec<Argument>,
}

/// A document together with the events annotated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub document: Document,
    pub events: Vec<EventInstance>,
}

/// Supported input layouts for [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Normalized,
    Rams,
    Wikievents,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(CorpusFormat::Normalized),
            "rams" => Ok(CorpusFormat::Rams),
            "wikievents" => Ok(CorpusFormat::Wikievents),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

/// Load and validate a corpus file. Documents come back sorted by `doc_id`.
///
/// WikiEvents coreference lives in a separate file; use [`read_wikievents`]
/// directly to attach it.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Vec<AnnotatedDocument>> {
    let path = path.as_ref();
    let mut docs = match format {
        CorpusFormat::Normalized => read_normalized(path)?,
        CorpusFormat::Rams => read_rams(path)?,
        CorpusFormat::Wikievents => read_wikievents(path, None)?,
    };
    for doc in &docs {
        doc.validate()?;
    }
    docs.sort_by(|a, b| a.document.doc_id.cmp(&b.document.doc_id));
    Ok(docs)
}

impl Document {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_bounds.len()
    }

    /// Sentence containing word `i`.
    pub fn sentence_index(&self, i: usize) -> Result<usize> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        // bounds are sorted and contiguous
        let idx = self.sentence_bounds.partition_point(|s| s.end < i);
        Ok(idx)
    }

    /// Sentence id of every word, in word order.
    pub fn sentence_ids(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.len());
        for (s, bounds) in self.sentence_bounds.iter().enumerate() {
            ids.extend(std::iter::repeat(s).take(bounds.len()));
        }
        ids
    }

    /// Sentence containing the whole span, or an error if it straddles two.
    pub fn sentence_of_span(&self, span: Span) -> Result<usize> {
        let first = self.sentence_index(span.start)?;
        let last = self.sentence_index(span.end)?;
        if first != last {
            return Err(Error::CrossSentenceSpan {
                doc_id: self.doc_id.clone(),
                span,
            });
        }
        Ok(first)
    }

    /// Enumerate every intra-sentential span of at most `max_span_len` words,
    /// ordered by `(start, end)`.
    pub fn enumerate_candidates(&self, max_span_len: usize) -> Vec<SpanCandidate> {
        let mut out = Vec::new();
        if max_span_len == 0 {
            return out;
        }
        for (sentence, bounds) in self.sentence_bounds.iter().enumerate() {
            for start in bounds.words() {
                let last = bounds.end.min(start + max_span_len - 1);
                for end in start..=last {
                    out.push(SpanCandidate {
                        span: Span::new(start, end),
                        sentence,
                    });
                }
            }
        }
        out
    }

    /// Depth of word `i` below its sentence root.
    fn dep_depth(&self, parents: &[Option<usize>], mut i: usize) -> usize {
        let mut depth = 0;
        while let Some(p) = parents[i] {
            depth += 1;
            i = p;
            if depth > parents.len() {
                break;
            }
        }
        depth
    }

    /// Head word of a span: the word closest to its sentence root in the
    /// dependency tree, smaller index on ties. With `fallback_to_last_word`
    /// the span end is returned when no parse is available.
    pub fn span_head(&self, span: Span, fallback_to_last_word: bool) -> Result<usize> {
        if span.end >= self.len() || span.is_empty() {
            return Err(Error::SpanOutOfRange {
                doc_id: self.doc_id.clone(),
                field: "span".into(),
                span,
                len: self.len(),
            });
        }
        let Some(parents) = &self.dep_parents else {
            if fallback_to_last_word {
                return Ok(span.end);
            }
            return Err(Error::MissingDependencies {
                doc_id: self.doc_id.clone(),
            });
        };
        let head = span
            .words()
            .min_by_key(|&i| (self.dep_depth(parents, i), i))
            .expect("non-empty span");
        Ok(head)
    }

    /// Cluster index for every span that appears in a coreference cluster.
    pub fn coref_lookup(&self) -> BTreeMap<Span, usize> {
        let mut map = BTreeMap::new();
        for (c, cluster) in self.coref_clusters.iter().flatten().enumerate() {
            for span in cluster {
                map.entry(*span).or_insert(c);
            }
        }
        map
    }

    /// Check every structural invariant of the document.
    pub fn validate(&self) -> Result<()> {
        let id = self.doc_id.as_str();
        let n = self.len();
        let mut expected = 0;
        for b in &self.sentence_bounds {
            if b.start != expected || b.end < b.start {
                return Err(Error::malformed(
                    id,
                    "sentence_bounds",
                    format!("bound {b} does not continue from word {expected}"),
                ));
            }
            expected = b.end + 1;
        }
        if expected != n {
            return Err(Error::malformed(
                id,
                "sentence_bounds",
                format!("bounds cover {expected} words but the document has {n}"),
            ));
        }

        if let Some(parents) = &self.dep_parents {
            self.validate_dependencies(parents)?;
        }

        for cluster in self.coref_clusters.iter().flatten() {
            for span in cluster {
                self.check_span(*span, "coref_clusters")?;
                self.sentence_of_span(*span)?;
            }
        }

        if let Some(graphs) = &self.amr {
            if graphs.len() != self.num_sentences() {
                return Err(Error::malformed(
                    id,
                    "amr",
                    format!(
                        "{} graphs for {} sentences",
                        graphs.len(),
                        self.num_sentences()
                    ),
                ));
            }
            for (s, graph) in graphs.iter().enumerate() {
                graph.validate(id, s, self.sentence_bounds[s])?;
            }
        }
        Ok(())
    }

    fn validate_dependencies(&self, parents: &[Option<usize>]) -> Result<()> {
        let id = self.doc_id.as_str();
        if parents.len() != self.len() {
            return Err(Error::malformed(
                id,
                "dep_parents",
                format!("{} entries for {} words", parents.len(), self.len()),
            ));
        }
        for (s, bounds) in self.sentence_bounds.iter().enumerate() {
            let mut roots = 0;
            for i in bounds.words() {
                match parents[i] {
                    None => roots += 1,
                    Some(p) if !bounds.contains(p) => {
                        return Err(Error::malformed(
                            id,
                            "dep_parents",
                            format!("word {i} has parent {p} outside sentence {s}"),
                        ))
                    }
                    Some(_) => {}
                }
            }
            if roots != 1 {
                return Err(Error::malformed(
                    id,
                    "dep_parents",
                    format!("sentence {s} has {roots} roots"),
                ));
            }
            for i in bounds.words() {
                let mut cur = i;
                let mut steps = 0;
                while let Some(p) = parents[cur] {
                    cur = p;
                    steps += 1;
                    if steps > bounds.len() {
                        return Err(Error::malformed(
                            id,
                            "dep_parents",
                            format!("cycle through word {i}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_span(&self, span: Span, field: &str) -> Result<()> {
        if span.is_empty() || span.end >= self.len() {
            return Err(Error::SpanOutOfRange {
                doc_id: self.doc_id.clone(),
                field: field.to_string(),
                span,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Sub-document made of the words in `window`, re-indexed from zero.
    ///
    /// Sentences cut by the window are clipped; AMR nodes whose alignment
    /// leaves the window lose their alignment, and dependency arcs leaving it
    /// make the word a root.
    pub fn slice(&self, window: Span) -> Result<Document> {
        self.check_span(window, "window")?;
        let off = window.start;
        let shift = |s: Span| Span::new(s.start - off, s.end - off);
        let mut sentence_bounds = Vec::new();
        let mut amr = self.amr.as_ref().map(|_| Vec::new());
        for (s, b) in self.sentence_bounds.iter().enumerate() {
            if !b.overlaps(&window) {
                continue;
            }
            let clipped = Span::new(b.start.max(window.start), b.end.min(window.end));
            sentence_bounds.push(shift(clipped));
            if let (Some(out), Some(graphs)) = (amr.as_mut(), self.amr.as_ref()) {
                let mut g = graphs[s].clone();
                for node in &mut g.nodes {
                    node.span = node
                        .span
                        .filter(|sp| clipped.covers(sp))
                        .map(shift);
                }
                out.push(g);
            }
        }
        let dep_parents = self.dep_parents.as_ref().map(|parents| {
            let mut sliced: Vec<Option<usize>> = parents[window.start..=window.end]
                .iter()
                .map(|p| p.filter(|p| window.contains(*p)).map(|p| p - off))
                .collect();
            // clipping can leave several roots per sentence; hang them under the first
            for b in &sentence_bounds {
                let mut first_root = None;
                for i in b.words() {
                    if sliced[i].is_none() {
                        match first_root {
                            None => first_root = Some(i),
                            Some(r) => sliced[i] = Some(r),
                        }
                    }
                }
            }
            sliced
        });
        let coref_clusters = self.coref_clusters.as_ref().map(|clusters| {
            clusters
                .iter()
                .map(|c| {
                    c.iter()
                        .filter(|s| window.covers(s))
                        .map(|s| shift(*s))
                        .collect()
                })
                .collect()
        });
        Ok(Document {
            doc_id: self.doc_id.clone(),
            words: self.words[window.start..=window.end].to_vec(),
            sentence_bounds,
            dep_parents,
            coref_clusters,
            amr,
            source_id: self.source_id.clone(),
        })
    }
}

impl AnnotatedDocument {
    /// Validate the document and every event on it.
    pub fn validate(&self) -> Result<()> {
        let doc = &self.document;
        doc.validate()?;
        for ev in &self.events {
            if ev.event_type.is_empty() {
                return Err(Error::malformed(&doc.doc_id, "event_type", "empty"));
            }
            doc.check_span(ev.trigger, "trigger")?;
            doc.sentence_of_span(ev.trigger)?;
            for arg in &ev.arguments {
                if arg.role.is_empty() {
                    return Err(Error::malformed(&doc.doc_id, "role", "empty"));
                }
                doc.check_span(arg.span, "arguments.span")?;
                doc.sentence_of_span(arg.span)?;
            }
        }
        Ok(())
    }
}

/// A candidate argument span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanCandidate {
    pub span: Span,
    pub sentence: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventTypeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleId(pub usize);

/// Event types, roles and the roles each event type admits.
///
/// The NULL ("no role") class is not a member of `roles`; classifiers put it
/// at class index 0 and shift real roles by one (see [`Schema::class_of`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub event_types: Vec<String>,
    pub roles: Vec<String>,
    /// Indexed by event type id.
    pub legal_roles: Vec<BTreeSet<RoleId>>,
}

impl Schema {
    /// Collect every event type and role seen in the corpus. Ids follow
    /// lexicographic order so the schema is independent of document order.
    pub fn from_corpus(docs: &[AnnotatedDocument]) -> Schema {
        let mut legal: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut roles = BTreeSet::new();
        for ev in docs.iter().flat_map(|d| &d.events) {
            let entry = legal.entry(ev.event_type.as_str()).or_default();
            for arg in &ev.arguments {
                entry.insert(arg.role.as_str());
                roles.insert(arg.role.as_str());
            }
        }
        let roles: Vec<String> = roles.into_iter().map(String::from).collect();
        let role_id = |r: &str| RoleId(roles.binary_search_by(|x| x.as_str().cmp(r)).unwrap());
        let legal_roles = legal
            .values()
            .map(|rs| rs.iter().map(|r| role_id(r)).collect())
            .collect();
        Schema {
            event_types: legal.keys().map(|s| s.to_string()).collect(),
            roles,
            legal_roles,
        }
    }

    pub fn event_type_id(&self, name: &str) -> Option<EventTypeId> {
        self.event_types.iter().position(|e| e == name).map(EventTypeId)
    }

    pub fn role_id(&self, name: &str) -> Option<RoleId> {
        self.roles.iter().position(|r| r == name).map(RoleId)
    }

    pub fn role_name(&self, role: RoleId) -> &str {
        &self.roles[role.0]
    }

    /// Number of classifier classes, NULL included.
    pub fn num_classes(&self) -> usize {
        self.roles.len() + 1
    }

    /// Classifier class index of a role (NULL is class 0).
    pub fn class_of(role: RoleId) -> usize {
        role.0 + 1
    }

    pub fn role_of_class(class: usize) -> Option<RoleId> {
        class.checked_sub(1).map(RoleId)
    }

    pub fn is_legal(&self, event_type: EventTypeId, role: RoleId) -> bool {
        self.legal_roles
            .get(event_type.0)
            .is_some_and(|rs| rs.contains(&role))
    }

    /// Error listing every event type and role in `docs` unknown to the
    /// schema, or to the legal role set of its event type.
    pub fn check(&self, docs: &[AnnotatedDocument]) -> Result<()> {
        let mut bad_types = BTreeSet::new();
        let mut bad_roles = BTreeSet::new();
        for ev in docs.iter().flat_map(|d| &d.events) {
            let ty = self.event_type_id(&ev.event_type);
            if ty.is_none() {
                bad_types.insert(ev.event_type.clone());
            }
            for arg in &ev.arguments {
                match (ty, self.role_id(&arg.role)) {
                    (_, None) => {
                        bad_roles.insert(arg.role.clone());
                    }
                    (Some(t), Some(r)) if !self.is_legal(t, r) => {
                        bad_roles.insert(format!("{}/{}", ev.event_type, arg.role));
                    }
                    _ => {}
                }
            }
        }
        if bad_types.is_empty() && bad_roles.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownLabels {
                event_types: bad_types.into_iter().collect(),
                roles: bad_roles.into_iter().collect(),
            })
        }
    }
}
