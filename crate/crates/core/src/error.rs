use std::path::PathBuf;

/// Errors produced by dataset handling, estimators, and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("norm parameter p must be positive, got {0}")]
    NonpositiveNorm(f64),

    #[error("k = {k} out of range for database of size {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error(
        "query {query} is at distance zero from a database point; queries must be \
         distinct from the database samples (exclude duplicates before estimating)"
    )]
    QueryCollision { query: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {kind} at byte {offset}")]
    MalformedBinary {
        path: PathBuf,
        kind: String,
        offset: u64,
    },

    #[error("{path}:{line}: {msg}")]
    MalformedText {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unknown dataset format {0:?} (expected dense-binary, sparse-text, or dense-csv)")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
