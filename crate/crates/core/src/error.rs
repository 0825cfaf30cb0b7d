use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },
    #[error("matrix function undefined at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },
    #[error("kernel is not finite at eigenvalue pair ({p}, {q})")]
    KernelNonFinite { p: f64, q: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("state is not faithful: smallest weight {min:e} is below the floor")]
    NotFaithful { min: f64 },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid stochastic map: {0}")]
    InvalidMap(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("estimators are biased: residual {residual:?}")]
    BiasedEstimator { residual: Vec<f64> },
    #[error("target means are infeasible (residual {residual:e}, escaping direction {direction:?})")]
    Infeasible { direction: Vec<f64>, residual: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state derivative is not traceless (trace {trace:e})")]
    NotTraceless { trace: f64 },
    #[error("tangent vector is zero")]
    ZeroTangent,
    #[error("Kubo function order {n} exceeds the supported maximum of {max}")]
    OrderTooLarge { n: usize, max: usize },
}

impl Error {
    /// True for errors caused by malformed input rather than by the mathematics
    /// of a well-formed request.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::InvalidDistribution(_)
                | Error::InvalidFamily(_)
                | Error::InvalidMap(_)
                | Error::InvalidArgument(_)
                | Error::OrderTooLarge { .. }
        )
    }
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
