use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const VERIFICATION_FAILED: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => exit::CONFIG,
            CliError::Usage(_) => exit::USAGE,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<muxphoton::Error> for CliError {
    fn from(e: muxphoton::Error) -> Self {
        match e {
            muxphoton::Error::Domain { name, .. } => CliError::config(name, e.to_string()),
            muxphoton::Error::Config(m) => CliError::config("config", m),
            muxphoton::Error::Numerical(m) => CliError::Numerical(m),
            muxphoton::Error::Usage(m) => CliError::Usage(m),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
