use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const ASSERTION: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: bns_core::Error,
    },

    #[error("{0} assertion(s) failed; see assertions.json")]
    Assertions(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use bns_core::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Assertions(_) => exit::ASSERTION,
            CliError::Stage { source, .. } => match source {
                E::InvalidParameter(_) | E::UnknownHyperparam { .. } | E::InvalidSplit(_) => {
                    exit::CONFIG
                }
                E::Io(_) | E::Csv(_) | E::Json(_) | E::Parse { .. } | E::Ordering { .. } => {
                    exit::IO
                }
                E::Assertion(_) => exit::ASSERTION,
                _ => exit::OTHER,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a core result with the pipeline stage that produced it.
pub fn stage<T>(name: &'static str, r: bns_core::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Stage {
        stage: name,
        source,
    })
}
