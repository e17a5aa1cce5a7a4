use thiserror::Error;

/// Errors raised by the lattice, gauge, solver and bounds modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid form degree: {0}")]
    InvalidDegree(String),

    #[error("degree or kind mismatch: {0}")]
    Mismatch(String),

    #[error("gauge fix failed after {iterations} iterations (residual {residual:e})")]
    GaugeFixFailed { iterations: usize, residual: f64 },

    #[error("solver aborted at iteration {iteration}: {reason}")]
    Aborted { iteration: usize, reason: String },

    #[error("missing boundary data: {0}")]
    MissingBoundary(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("(p, q) = ({p}, {q}) lies outside the sector p < 0, q < 0")]
    OutOfSector { p: f64, q: f64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("too few refinement levels: {0} (need at least 3)")]
    TooFewLevels(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
