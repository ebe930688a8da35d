use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::GaussianFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid or inconsistent input data (files, histograms, images).
    #[error("data error: {0}")]
    Data(String),
    /// A numerical procedure failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A least-squares fit did not converge; carries the best parameters found.
    #[error("fit error: {message}")]
    Fit {
        message: String,
        best: Option<Box<GaussianFit>>,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io { .. } => 3,
            Error::Domain(_) | Error::Numerical(_) | Error::Fit { .. } => 4,
        }
    }
}
