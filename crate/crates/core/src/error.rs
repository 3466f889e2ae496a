use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register label `{0}` appears on both sides of a tensor product")]
    LabelCollision(String),
    #[error("unknown register label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max |M - M^dag| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("function undefined on a nonzero eigenvalue {0:.3e}")]
    SupportViolation(f64),
    #[error("conditioning event has probability zero; state undefined")]
    ZeroProbability,
    #[error("size budget exceeded: need {needed}, limit {limit} ({what})")]
    Budget { what: String, needed: u128, limit: u128 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
