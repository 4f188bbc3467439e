use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("empty phoneme sequence")]
    EmptySequence,

    #[error("no common tokens")]
    NoCommonTokens,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("zero variance")]
    ZeroVariance,

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("k = {k} out of range (allowed 1..={max})")]
    KOutOfRange { k: usize, max: usize },

    #[error("LDA rank limit: k = {k} exceeds classes - 1 = {limit}")]
    LdaRankLimit { k: usize, limit: usize },

    #[error("group {0:?} has fewer than 2 members")]
    SingletonGroup(String),

    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },

    #[error("word not found: {0}")]
    UnknownWord(String),

    #[error("missing words: {}", .0.join(", "))]
    MissingWords(Vec<String>),

    #[error("word in multiple groups: {0}")]
    WordInMultipleGroups(String),

    #[error("invalid table: {}", .0.join("; "))]
    InvalidTable(Vec<String>),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("unknown record_type: {0}")]
    UnknownRecordType(String),

    #[error("nothing to plot")]
    NothingToPlot,

    #[error("misaligned layers: {0}")]
    MisalignedLayers(String),

    #[error("group construction failed: {0}")]
    Builder(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<str>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
