use thiserror::Error;

/// Errors raised by constructors, functionals and solvers in this crate.
///
/// Numerical *events* that are part of normal operation (a rejected time
/// step, a dt underflow, a Moffatt nonexistence verdict) are reported as
/// values by the relevant APIs rather than through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state has {got} samples but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("negative sample {value:e} at node {index}")]
    NegativeSample { index: usize, value: f64 },

    #[error("entropy undefined: nonpositive sample {value:e} at node {index} with delta = 0")]
    NonpositiveSample { index: usize, value: f64 },

    #[error("quadrature did not reach tolerance (estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("total mass must be positive, got {0:e}")]
    ZeroMass(f64),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("steady continuation failed at q = {attempted_q}; last converged q = {last_converged_q:?}")]
    ContinuationFailed {
        attempted_q: f64,
        last_converged_q: Option<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
