use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate snapshot label {0:?}")]
    DuplicateLabel(String),

    #[error("no snapshots given")]
    NoSnapshots,

    #[error("snapshot {0:?} contains no tokens")]
    EmptySnapshot(String),

    #[error("no word reaches min_count={min_count} in every snapshot")]
    EmptyIntersection { min_count: u64 },

    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),

    #[error("word {word:?} does not occur in snapshot {snapshot:?}")]
    WordAbsent { word: String, snapshot: String },

    #[error("snapshot {0:?} carries no part-of-speech tags")]
    NotTagged(String),

    #[error("hierarchical softmax needs at least two words, got {0}")]
    TooFewWords(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient")]
    NonFiniteGradient,

    #[error("training diverged (non-finite value) in epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("training snapshot {snapshot:?}: {source}")]
    Training {
        snapshot: String,
        #[source]
        source: Box<Error>,
    },

    #[error("normal equations are rank deficient; use a ridge penalty > 0")]
    RankDeficient,

    #[error("aligning {word:?} in snapshot {snapshot:?}: {source}")]
    Alignment {
        word: String,
        snapshot: String,
        #[source]
        source: Box<Error>,
    },

    #[error("warped vector of {0:?} has zero norm")]
    ZeroNorm(String),

    #[error("need {needed} eligible words, only {available} available")]
    InsufficientWords { needed: usize, available: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
