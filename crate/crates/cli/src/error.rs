use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Infeasible(fsg_core::Error),

    #[error("{0}")]
    Numerical(fsg_core::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<fsg_core::Error> for CliError {
    fn from(e: fsg_core::Error) -> Self {
        match e {
            fsg_core::Error::Infeasible { .. } => CliError::Infeasible(e),
            fsg_core::Error::Domain(msg) => CliError::Config(msg),
            other => CliError::Numerical(other),
        }
    }
}
