use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub(crate) fn config_err(e: topotrack::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub(crate) fn data_err(e: topotrack::Error) -> CliError {
    match e {
        topotrack::Error::Io(io) => CliError::Io(io),
        other => CliError::Data(other.to_string()),
    }
}

pub type CliResult<T> = Result<T, CliError>;
