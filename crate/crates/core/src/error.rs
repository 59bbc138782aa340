use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numeric breakdown: {0}")]
    NumericBreakdown(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("oracle size limit exceeded: dimension {dim} > limit {limit}")]
    OracleSize { dim: usize, limit: usize },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fabric poisoned: worker {worker} failed")]
    FabricPoisoned { worker: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("worker {worker} failed: {source}")]
    Worker {
        worker: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("reference solve did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    ReferenceFailure { iterations: usize, grad_norm: f64 },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
