use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff {requested} exceeds the memory budget of {limit}")]
    CutoffTooLarge { requested: usize, limit: usize },

    #[error("cutoff {n_max} too small: {reason}")]
    CutoffTooSmall { n_max: usize, reason: String },

    #[error("basis mismatch: n_max {left} vs {right}")]
    BasisMismatch { left: usize, right: usize },

    #[error("operator list is not normally ordered or longer than four: {0}")]
    NotNormallyOrdered(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("phase averaging required for {0}")]
    MissingAveraging(String),

    #[error("invalid phase averaging: {0}")]
    InvalidAveraging(String),

    #[error("inconsistent matrix-element table: {0}")]
    Inconsistent(String),

    #[error("state has no closed form here: {0}")]
    OutOfCatalog(String),

    #[error("integration tail bound {bound:e} exceeds {limit:e}")]
    TailBound { bound: f64, limit: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
