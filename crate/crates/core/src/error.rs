use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {context} (len {len})")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at iteration {iteration} ({network} loss is not finite)")]
    Divergence { iteration: usize, network: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires {expected} data, model holds {found}")]
    WrongDataKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("class {class} has {available} usable entries, {requested} requested (short by {})", requested - available)]
    InsufficientPool {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("class {class} has {available} examples, needs at least {required}")]
    ClassTooSmall {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("signal has zero power")]
    SilentSignal,

    #[error("unsupported audio format: {0}")]
    UnsupportedAudio(String),

    #[error("sequence too short: {len} frames, need at least {required}")]
    TooShort { len: usize, required: usize },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ensemble member {member}: {source}")]
    Member {
        member: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
