use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("domain contains no samples")]
    EmptyDomain,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("requested {requested} components but at most {max} are available")]
    Rank { requested: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unlabeled target rows have no pseudo labels")]
    MissingPseudoLabels,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no labeled samples to evaluate")]
    NoLabeledSamples,

    #[error("at least {required} points are required, found {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("degenerate table: {0}")]
    DegenerateTable(String),

    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),

    #[error("cell ({algorithm}, {target}, run {run}): {source}")]
    Cell {
        algorithm: String,
        target: String,
        run: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through [`Error::Cell`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Cell { source, .. } => source.root(),
            other => other,
        }
    }
}
