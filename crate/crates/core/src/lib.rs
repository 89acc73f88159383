//! Data model, AMR graph construction and evaluation for document-level
//! event argument extraction.
//!
//! All word indices are 0-based and all spans are inclusive `[start, end]`
//! pairs, both in memory and on the wire.

pub mod amr;
pub mod corpus;
mod error;
pub mod metrics;
pub mod synth;

pub use error::{Error, Result};
