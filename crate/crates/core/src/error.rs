use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least {needed} points, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("inputs are sampled on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid warping: {0}")]
    InvalidWarping(String),

    #[error("function set is empty")]
    EmptyFunctionSet,

    #[error("need at least {needed} functions, got {got}")]
    TooFewFunctions { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible shape template: {0}")]
    InfeasibleTemplate(String),

    #[error("height vector violates the valley constraints at extremum {index}")]
    InfeasibleHeights { index: usize },

    #[error("{dropped} of {total} bootstrap replicates failed")]
    TooManyFailedReplicates { dropped: usize, total: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
