use thiserror::Error;

/// Exit status for input and configuration problems.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when the data violate a test precondition.
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Config(_) => EXIT_INPUT,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<sphericity::Error> for CliError {
    fn from(e: sphericity::Error) -> Self {
        use sphericity::Error as E;
        match e {
            E::InvalidConfig(m) => CliError::Config(m),
            E::InvalidInput(m) => CliError::Input(m),
            other => CliError::Degenerate(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
