//! Error type shared by every module.

use thiserror::Error;

/// Failure modes. The CLI maps these to exit codes via [`Error::class`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("log-leading-order: the small-argument Hankel term for order 0 is logarithmic")]
    LogLeadingOrder,
    #[error("hypothesis violated: lowest cross-section eigenvalue nu0^2 = {nu0_sq} is not positive")]
    Hypothesis { nu0_sq: f64 },
    #[error("zero-energy resonance: a = {a:e} is below 1e-10 |b| with b = {b:e}")]
    ZeroResonance { a: f64, b: f64 },
    #[error("coincident points: the resolvent is singular on the diagonal")]
    Diagonal,
    #[error("mode sum not converged after {modes} modes: tail bound {achieved:e}")]
    Convergence { modes: usize, achieved: f64 },
    #[error("ODE step size collapsed at r = {r}")]
    StepCollapse { r: f64 },
    #[error("near resonance: |Wronskian| = {wronskian:e} against scale {scale:e}")]
    NearResonance { wronskian: f64, scale: f64 },
    #[error("undersampled oscillation: {0}")]
    Sampling(String),
    #[error("nonpositive density in fit window at lambda = {lambda}")]
    Underflow { lambda: f64 },
    #[error("eigensolver did not converge")]
    EigenSolver,
    #[error("mollifier width {sigma} below 3x level spacing {spacing}")]
    Resolution { sigma: f64, spacing: f64 },
    #[error("leaf parameter on the boundary: {0}")]
    Boundary(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Hypothesis,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Domain(_) => ErrorClass::Config,
            Error::Hypothesis { .. } | Error::ZeroResonance { .. } => ErrorClass::Hypothesis,
            _ => ErrorClass::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
