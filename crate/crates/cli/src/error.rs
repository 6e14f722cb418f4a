use std::path::PathBuf;

use thiserror::Error;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    InvariantFailure = 1,
    InputError = 2,
    NotRepresentable = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] qdf::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Core(qdf::Error::NotExchangeable(_) | qdf::Error::ConeLaw { .. }) => {
                Status::InvariantFailure
            }
            CliError::Core(qdf::Error::NotRepresentable { .. }) => Status::NotRepresentable,
            _ => Status::InputError,
        }
    }

    /// Extra lines for the human report: the failing levels of an exchangeability check.
    pub fn details(&self) -> Vec<String> {
        match self {
            CliError::Core(qdf::Error::NotExchangeable(report)) => report
                .describe()
                .into_iter()
                .zip(&report.levels)
                .filter(|(_, l)| {
                    l.symmetry_violation > report.tolerance
                        || l.consistency_violation > report.tolerance
                })
                .map(|(line, _)| line)
                .collect(),
            _ => Vec::new(),
        }
    }
}
