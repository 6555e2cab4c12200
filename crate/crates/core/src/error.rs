use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = RadError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RadError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate low-rank matrix (largest singular value {sigma_max:e})")]
    DegenerateLowRank { sigma_max: f64 },

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("solver diverged: non-finite iterate at iteration {iteration}")]
    SolverDiverged { iteration: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("corrupt input file: {rejected} of {total} rows rejected")]
    CorruptInput { rejected: usize, total: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("duplicate row index {0}")]
    DuplicateRow(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RadError {
    /// True for failures caused by the numerics rather than by the caller's input.
    pub fn is_internal(&self) -> bool {
        matches!(self, RadError::SvdFailed | RadError::SolverDiverged { .. })
    }
}
