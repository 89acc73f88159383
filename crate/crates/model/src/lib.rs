//! Neural components: the shared transformer encoder run as a global and a
//! trigger-aware local stream, relation-typed graph interaction over AMR
//! graphs, and the fusion/classification head.

pub mod config;
pub mod encoder;
mod error;
pub mod gradcheck;
pub mod head;
pub mod interaction;
pub mod model;
pub mod ops;
pub mod params;
pub mod tokenizer;
pub mod twostream;

pub use config::ModelConfig;
pub use error::{Error, Result};
pub use model::{ArgumentModel, ForwardOutput, PreparedExample};
