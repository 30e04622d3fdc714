use std::process::ExitCode;

use nevlab::Error;

/// Failure of a command, carrying its exit-code class.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Parse(String),
    /// Profile verdict contradicts the requested direction.
    Mismatch(String),
    /// A named audited check failed.
    Check(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Mismatch(_) => 4,
            CliError::Check(_) => 5,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::Parse { .. } => 2,
                Error::Domain(_) | Error::ProfileRejected { .. } => 3,
                Error::Audit(_)
                | Error::BuilderResidual { .. }
                | Error::NewtonDivergence { .. }
                | Error::NonConvergence(_)
                | Error::Quadrature { .. } => 5,
                Error::Io(_) => 1,
            },
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Mismatch(m) => write!(f, "direction mismatch: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
