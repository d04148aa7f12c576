use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the constrained decoder itself.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    /// No symbol admitted by the first-token policy occurs in the index.
    #[error("E1: empty candidate set at decoding step 1")]
    EmptyFirstStep,
    /// Every hypothesis ran out of continuations before reaching the minimum span length.
    #[error("E2: all hypotheses died before reaching min_span_len = {min_span_len}")]
    NoFinishedSpan { min_span_len: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("index format error: {0}")]
    Format(String),

    #[error("protocol error (request {}): {message}", request_id.map_or_else(|| "handshake".to_string(), |id| id.to_string()))]
    Protocol {
        request_id: Option<u64>,
        message: String,
    },

    #[error("external session error: {0}")]
    Session(String),

    #[error(transparent)]
    Decode(#[from] DecodeError),

    /// An invariant that the engine itself guarantees was found broken.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate a bug or corrupted state rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
