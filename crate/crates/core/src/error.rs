use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),

    #[error("phase {phi} rad is outside the linearized domain |phi| < pi/2")]
    OutsideLinearDomain { phi: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("oracle: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
