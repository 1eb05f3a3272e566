use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {d} exceeds the supported maximum of {max}")]
    DimensionTooLarge { d: usize, max: usize },

    #[error("feature {index} is degenerate (empirical mean {mean}, standard deviation 0)")]
    DegenerateFeature { index: usize, mean: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis of {size} functions exceeds the limit of {max}")]
    BasisTooLarge { size: u128, max: u128 },

    #[error("search budget exceeded: {evaluations} subsets requested, limit {max}")]
    BudgetExceeded { evaluations: u128, max: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is outside its domain")]
    Domain(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("mixed 0/1 and -1/+1 encodings (first conflicting cell at row {row}, column {column})")]
    MixedEncoding { row: usize, column: usize },

    #[error("split would leave an empty side ({train} train / {test} test)")]
    EmptySplit { train: usize, test: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
