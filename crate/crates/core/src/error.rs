use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("quadrature failed on [{a}, {b}]: estimate {value:e} with error {error:e} after {evals} evaluations ({reason})")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        evals: usize,
        reason: String,
    },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("profile rejected at x = {x}: {reason}")]
    ProfileRejected { x: f64, reason: String },

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("map builder residual {residual:e} exceeds tolerance {tol:e}")]
    BuilderResidual { residual: f64, tol: f64 },

    #[error("Newton inversion diverged at z = {re} + {im}i")]
    NewtonDivergence { re: f64, im: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
