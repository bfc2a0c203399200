use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing artifact {} (run `langshift train` first or pass --end-to-end)", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{0:#}")]
    Input(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::MissingArtifact(_) => 3,
            CliError::Input(_) => 2,
        }
    }
}

impl From<langshift::Error> for CliError {
    fn from(e: langshift::Error) -> Self {
        match e {
            langshift::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Input(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}
