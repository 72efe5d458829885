use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root not bracketed on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge after {iterations} iterations (last bracket [{lo}, {hi}])")]
    RootNotConverged { iterations: usize, lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("probability {0} outside [0, 1] beyond rounding tolerance")]
    ProbabilityOutOfRange(f64),

    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),

    #[error("iteration did not converge within {rounds} rounds")]
    NotConverged { rounds: usize },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("effective sample size {ess:.1} below the minimum of 100")]
    InsufficientSamples { ess: f64 },

    #[error("sequence audit failed at round {round}: {message}")]
    Audit { round: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
