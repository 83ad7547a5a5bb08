use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("missing ground truth: {0}")]
    MissingGroundTruth(&'static str),
    #[error("point is not in the declared argmin set (distance {0:e})")]
    NotInArgmin(f64),
    #[error(
        "nonsmooth objective is not supported by the continuous integrator; use the ifb module"
    )]
    NonsmoothDynamics,
    #[error("series did not reach the truncation bound within {0} terms")]
    SeriesBudget(usize),
    #[error("trajectory blew up at t = {t}: |x| = {norm:e}")]
    BlowUp { t: f64, norm: f64 },
    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },
    #[error("fit rejected: {0}")]
    Fit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
