use std::fmt;

/// Location of a failed point evaluation, used in error reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub d: f64,
    pub t: f64,
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d = {:.6e}, t = {:.6e})", self.d, self.t)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration did not converge ({context}): value {value:.6e}, error estimate {err_est:.3e} after {panels} panels")]
    NonConvergence {
        context: String,
        value: f64,
        err_est: f64,
        panels: usize,
    },

    #[error("series truncation target {target:.3e} unreachable ({context}); achieved {achieved:.3e}")]
    Truncation {
        context: String,
        target: f64,
        achieved: f64,
    },

    #[error("point outside the coordinate domain of {0}")]
    OutsideDomain(String),

    #[error("empty tent: no grid point lies in the ball around {center} with radius {radius}")]
    EmptyTent { center: String, radius: f64 },

    #[error("rejected input: {0}")]
    Rejected(String),

    #[error("gaussian bound fit failed: ratio still growing as d^2/t grows, worst point {at}")]
    FitFailure { at: SamplePoint, ratio: f64 },

    #[error("grid too coarse for the combined bandwidth; need at least {required} points per axis")]
    Bandwidth { required: usize },

    #[error("estimate contradicted: {0}")]
    Contradiction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
