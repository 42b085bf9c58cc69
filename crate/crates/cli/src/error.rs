use std::fmt;
use std::path::PathBuf;

use dpmix_core::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(Error),
    AuditFailed(String),
}

impl CliError {
    /// 0 success, 1 I/O or internal failure, 2 invalid config, 3 insufficient data, 4 audit failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::AuditFailed(_) => 4,
            CliError::Core(Error::InsufficientData { .. }) => 3,
            CliError::Core(
                Error::InvalidParameter(_)
                | Error::MalformedModel(_)
                | Error::Json(_)
                | Error::AsymmetricCovariance { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidRadii { .. }
                | Error::MetricMismatch { .. },
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::AuditFailed(m) => write!(f, "audit failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
