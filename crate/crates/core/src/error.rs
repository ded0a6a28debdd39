use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no unstable modes: Morse index is zero")]
    NoUnstableModes,
    #[error("invalid epsilon {epsilon}: {reason}")]
    InvalidEpsilon { epsilon: f64, reason: String },
    #[error("eigensolver failure: {0}")]
    SolverFailure(String),
    #[error("first mode changes sign at interior node {node}")]
    NotFirstEigenfunction { node: usize },
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
    #[error("graph breakdown at node (i={i}, j={j}): {reason}")]
    GraphBreakdown { i: usize, j: usize, reason: String },
    #[error("resonance: delta {delta} lies within {gap_tol} of -lambda = {neg_lambda}")]
    Resonance { delta: f64, neg_lambda: f64, gap_tol: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no contraction at level {level}: {reason}")]
    NoContraction { level: usize, reason: String },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
