use std::path::PathBuf;

use docarg_core::corpus::Span;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error(transparent)]
    Data(#[from] docarg_core::Error),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("{}: {reason}", path.display())]
    Checkpoint { path: PathBuf, reason: String },
    #[error("word {word} has no subwords")]
    EmptyWord { word: usize },
    #[error(
        "document `{doc_id}`: trigger {trigger} lies past the first {budget} subword positions; \
         set encoder.window_policy = \"trigger_centered\""
    )]
    TriggerOutsideWindow { doc_id: String, trigger: Span, budget: usize },
    #[error("unknown event type `{0}`")]
    UnknownEventType(String),
    #[error("graph does not match document `{doc_id}`: {reason}")]
    GraphMismatch { doc_id: String, reason: String },
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
