use lra_core::LraError;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] LraError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_DATA,
            CliError::Core(e) => match e {
                LraError::InvalidParameter(_) => EXIT_USAGE,
                LraError::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(LraError::Json(e))
    }
}
