use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input parameter lies outside its admissible domain.
    #[error("parameter `{name}` out of domain: {detail}")]
    Domain { name: &'static str, detail: String },

    /// A matrix failed density-matrix validation.
    #[error("invalid two-qubit state: {0}")]
    InvalidState(String),

    /// A state does not have the trapped gg/ee + equal-ge/eg form.
    #[error("state is not in the trapped family: {0}")]
    NotTrapped(String),

    /// Post-selection on an outcome of (numerically) zero probability.
    #[error("dead branch at step {step}: outcome probability {probability:e}")]
    DeadBranch { step: usize, probability: f64 },

    /// Iteration cap reached before the convergence threshold.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Truncation could not satisfy the requested tail tolerance.
    #[error("Fock truncation exceeds {max} levels for tail tolerance {tail_tol:e}")]
    Truncation { max: usize, tail_tol: f64 },

    /// Dimensions of two objects do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        name,
        detail: detail.into(),
    }
}
