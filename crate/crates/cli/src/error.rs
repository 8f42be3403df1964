use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error(transparent)]
    Model(dibom::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<dibom::Error> for CliError {
    fn from(e: dibom::Error) -> Self {
        match e {
            dibom::Error::NonFinite(what) => CliError::Numerical(what),
            other => CliError::Model(other),
        }
    }
}

impl CliError {
    /// 2 for config errors, 3 for numerical aborts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Model(_) | CliError::Io(_) => 1,
        }
    }
}
