use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] scour_core::Error),
    #[error("cannot read {path}: {source}")]
    Input {
        path: String,
        #[source]
        source: scour_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("gradient check failed: max relative error {max_relative_error:e}")]
    GradCheckFailed { max_relative_error: f64 },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 validation or configuration, 2 I/O, 3 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Input { source, .. } if source.is_io() => 2,
            CliError::Write { .. } | CliError::Output(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
