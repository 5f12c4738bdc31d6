use thiserror::Error;

use crate::solver::IterationTrace;

/// Errors produced by the mixamp library.
#[derive(Debug, Error)]
pub enum Error {
    /// Sizes of grids, masks or matrices are inconsistent or out of range.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A scalar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The explicit Kronecker oracle refuses to build large operators.
    #[error("oracle-scale error: side {side} exceeds the oracle limit of {limit}")]
    OracleScale { side: usize, limit: usize },

    /// The fast transform path only handles some sizes.
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// The problem has no measurements to work with.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// Non-finite values appeared during an iteration. Carries the trace
    /// recorded up to (and excluding) the failing step.
    #[error("iteration diverged at t = {iteration}")]
    Divergence {
        iteration: usize,
        trace: Box<IterationTrace>,
    },

    /// The baseline solver could not make progress.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Malformed image or table file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
