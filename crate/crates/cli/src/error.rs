use thiserror::Error;

/// Exit codes follow the BSD `sysexits` convention for usage and data errors.
pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGING: i32 = 2;
pub const EXIT_QP_FAILURE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("malformed input: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solver(#[from] noisy_gs::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
            CliError::Solver(noisy_gs::Error::Io(_)) => EXIT_IO,
            CliError::Solver(_) => EXIT_USAGE,
        }
    }
}
