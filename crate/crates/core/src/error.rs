//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("weights do not sum to 1: sum={sum}")]
    Normalization { sum: f64 },

    #[error("negative weight at index {index}: {value}")]
    Negative { index: usize, value: f64 },

    #[error("non-finite value at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("indices {first} and {second} map to the same density")]
    Injectivity { first: usize, second: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible {gate} gate: {detail}")]
    Infeasible { gate: &'static str, detail: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("degenerate evidence: every prior-supported likelihood is zero")]
    DegenerateEvidence,

    #[error("empty restriction: conditioning set has zero prior mass")]
    EmptyRestriction,

    #[error("empty ball: no prior mass at the requested radius")]
    EmptyBall,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }
}
