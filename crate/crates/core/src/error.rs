use thiserror::Error;

/// Errors raised by the simulation pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("quadrature did not converge for element ({i}, {j}): estimated error {error:.3e}")]
    Quadrature { i: usize, j: usize, error: f64 },

    #[error("basis too small or state leaks below floor: captured norm {captured:.6}")]
    BasisLeak { captured: f64 },

    #[error("norm drift {drift:.3e} over a pulse window exceeds tolerance after step refinement")]
    NormDrift { drift: f64 },

    #[error("expectation value has imaginary residual {residual:.3e}")]
    NonHermitian { residual: f64 },

    #[error("eigendecomposition of the position matrix failed: {0}")]
    Eigen(String),

    #[error("sampling rejected {rate:.1}% of draws below the floor")]
    RejectionRate { rate: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("delay grid is not uniform")]
    NonUniformGrid,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("ill-conditioned amplitude fit (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
