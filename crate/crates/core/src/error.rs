use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("harmonic regime violated: ell < alpha*p < 1/ell fails ({0})")]
    Regime(String),

    #[error("coordinate out of range: {0}")]
    OutOfRange(String),

    #[error("vertex continuity violated at edge ({n},{k}): mismatch {mismatch:e}")]
    Continuity { n: usize, k: usize, mismatch: f64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("depth insufficient: {0}")]
    Depth(String),

    #[error("point lies on a cell boundary: {0}")]
    Boundary(String),

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("resolution mismatch: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
