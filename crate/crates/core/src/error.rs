use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported analysis: {0}")]
    UnsupportedAnalysis(String),

    #[error("state cap exceeded: {states} states required, cap is {cap}")]
    StateCapExceeded { states: u128, cap: u64 },

    #[error("path cap exceeded: more than {cap} paths at block length {block_length}")]
    PathCapExceeded { block_length: usize, cap: u64 },

    #[error("inconsistent observation at index {index}: {reason}")]
    InconsistentObservation { index: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transfer function zero on the unit circle at z = {re} + {im}j")]
    UnitCircleZero { re: f64, im: f64 },

    #[error("minimum-phase verdict indeterminate: zero at |z| = {modulus} is within 1e-9 of the unit circle")]
    Indeterminate { modulus: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invariant `{name}` violated: {detail}")]
    InvariantViolation { name: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
