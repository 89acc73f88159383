//! Corpus loading shared by every command.

use std::path::Path;

use anyhow::{Context, Result};
use docarg_core::corpus::{load_corpus, read_wikievents, AnnotatedDocument, CorpusFormat, CorpusStats};

/// Load, validate and sort a corpus. `coref` only applies to WikiEvents.
pub fn load(path: &Path, format: CorpusFormat, coref: Option<&Path>) -> Result<Vec<AnnotatedDocument>> {
    let docs = match (format, coref) {
        (CorpusFormat::Wikievents, Some(c)) => {
            let mut docs = read_wikievents(path, Some(c))?;
            for d in &docs {
                d.validate()?;
            }
            docs.sort_by(|a, b| a.document.doc_id.cmp(&b.document.doc_id));
            docs
        }
        _ => load_corpus(path, format)?,
    };
    let stats = CorpusStats::of(&docs);
    log::info!(
        "{}: {} documents, {} examples, {} events, {} arguments",
        path.display(),
        stats.documents,
        stats.examples,
        stats.events,
        stats.arguments
    );
    Ok(docs)
}

pub fn load_required(path: Option<&Path>, what: &str, format: CorpusFormat, coref: Option<&Path>) -> Result<Vec<AnnotatedDocument>> {
    let path = path.with_context(|| format!("no {what} corpus configured (set data.{what})"))?;
    load(path, format, coref).with_context(|| format!("loading {what} corpus {}", path.display()))
}
