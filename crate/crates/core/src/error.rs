use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("argument outside the function's domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("packing failure: grid yields {available} centers, {requested} requested")]
    PackingFailure { requested: usize, available: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid class parameter: {0}")]
    InvalidClass(String),

    #[error("invalid packing: {0}")]
    InvalidPacking(String),

    #[error("unknown instance name `{0}`")]
    NotFound(String),

    #[error("invalid chain state: {0}")]
    InvalidState(String),

    #[error("density must be positive and finite, got {0}")]
    InvalidDensity(f64),

    #[error("instance has no reference value")]
    NeedsReference,

    #[error("discretization error: {0}")]
    Discretization(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("state space of size {size} exceeds exhaustive limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("property violated: {0}")]
    PropertyViolation(String),
}
