use thiserror::Error;

/// Errors raised by the numerical routines and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure constants: {0}")]
    InvalidParams(String),

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge ({context}): error estimate {error:.3e} above target {target:.3e}")]
    NonConvergence {
        context: String,
        error: f64,
        target: f64,
    },

    #[error("Cartan measure constant has not been calibrated for this space")]
    Uncalibrated,

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("finite-difference step too small: residual grew from {coarse:.3e} to {fine:.3e} under h -> h/2")]
    StepTooSmall { coarse: f64, fine: f64 },

    #[error("grid too coarse: weak norm changed by {change:.1}% under refinement")]
    GridTooCoarse { change: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
