use std::io;
use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("{0}")]
    Core(#[from] parnet::Error),

    /// Some replications diverged; their outputs were still written.
    #[error("{0} replication(s) diverged")]
    Diverged(usize),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Diverged(_) => 3,
            CliError::Core(e) => match e {
                parnet::Error::Divergence { .. } => 3,
                parnet::Error::InvalidArchitecture(_) | parnet::Error::InvalidConfig(_) | parnet::Error::EmptyGrid => 1,
                parnet::Error::DimensionMismatch { .. } | parnet::Error::InvalidData(_) | parnet::Error::Domain(_) => 2,
            },
        }
    }
}
