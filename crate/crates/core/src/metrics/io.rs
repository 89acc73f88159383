//! Predictions JSONL: an optional metadata header line followed by one
//! record per event,
//! `{"doc_id", "event_index", "predictions": [{"role", "span", "score"}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScoredArgument;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPredictions {
    pub doc_id: String,
    pub event_index: usize,
    pub predictions: Vec<ScoredArgument>,
}

/// Free-form metadata written as the first line, wrapped as
/// `{"metadata": {...}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionsHeader {
    pub format_version: u32,
    #[serde(default)]
    pub documents: usize,
    #[serde(default)]
    pub events: usize,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    metadata: PredictionsHeader,
}

pub fn write_predictions_string(header: &PredictionsHeader, preds: &[EventPredictions]) -> String {
    let mut out = serde_json::to_string(&HeaderLine {
        metadata: header.clone(),
    })
    .expect("header serializes");
    out.push('\n');
    for p in preds {
        out.push_str(&serde_json::to_string(p).expect("predictions serialize"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(path: impl AsRef<Path>, header: &PredictionsHeader, preds: &[EventPredictions]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_predictions_string(header, preds)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_predictions_str(text: &str) -> Result<(Option<PredictionsHeader>, Vec<EventPredictions>)> {
    parse(text, Path::new("<memory>"))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<(Option<PredictionsHeader>, Vec<EventPredictions>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path)
}

fn parse(text: &str, path: &Path) -> Result<(Option<PredictionsHeader>, Vec<EventPredictions>)> {
    let mut header = None;
    let mut preds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |e| crate::corpus::format_json_error(path, i + 1, line, e);
        if line.trim_start().starts_with("{\"metadata\"") {
            header = Some(serde_json::from_str::<HeaderLine>(line).map_err(err)?.metadata);
        } else {
            preds.push(serde_json::from_str(line).map_err(err)?);
        }
    }
    Ok((header, preds))
}
