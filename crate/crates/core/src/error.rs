use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the rod library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input parameter violates its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Evaluation point outside the parametric domain.
    #[error("point s = {s} lies outside the domain [0, {length}]")]
    Domain { s: f64, length: f64 },

    /// Boundary constraints are inconsistent or over-determined.
    #[error("constraint error: {0}")]
    Constraint(String),

    /// `|φ'|` dropped below the degeneracy floor at a quadrature point.
    #[error("degenerate configuration at s = {s}: |phi'| = {jac:e}")]
    Degenerate { s: f64, jac: f64 },

    /// A linear system could not be factorized.
    #[error("singular matrix (pivot {pivot} of {size})")]
    Singular { pivot: usize, size: usize },

    /// Newton–Raphson did not reach the increment tolerance.
    #[error("Newton iteration did not converge at t = {time} after {iterations} iterations")]
    NewtonFailure {
        time: f64,
        iterations: usize,
        /// Reduced residual max-norm recorded at every iteration.
        residual_history: Vec<f64>,
        /// Reduced increment max-norm recorded at every iteration.
        increment_history: Vec<f64>,
    },

    /// Data series are too short or inconsistent for the requested analysis.
    #[error("invalid series: {0}")]
    Series(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
