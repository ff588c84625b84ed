use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("field belongs to a different basis")]
    BasisMismatch,
    #[error("negative noise eigenvalue mu[{index}] = {value}")]
    NegativeEigenvalue { index: usize, value: f64 },
    #[error("picard iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NoConvergence { iterations: usize, distance: f64 },
    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("moment for rho = {0} not present in series")]
    MissingMoment(f64),
    #[error("horizon too short: {0}")]
    Horizon(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
