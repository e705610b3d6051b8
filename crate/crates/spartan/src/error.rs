// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("malformed container: {0}")]
    Container(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] spartan_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 when the request was valid but
    /// no design satisfies it, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(e) if e.is_infeasible() => 2,
            _ => 3,
        }
    }
}
