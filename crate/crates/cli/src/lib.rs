//! Training, evaluation, prediction and error analysis for the document-level
//! argument extractor, as a library behind the `docarg` binary.

pub mod commands;
pub mod config;
pub mod data;
pub mod evaluate;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Pretty JSON, creating parent directories.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
