use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{}: {}", .0.name(), .0)]
    Core(#[from] floquet_core::Error),
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
