use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: no records")]
    NoRecords { path: PathBuf },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation diverged in year {year}: {message}")]
    Diverged { year: i32, message: String },

    #[error("MCMC fit failed at iteration {iteration}: {message}")]
    Fit { iteration: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Validation failures (bad input) as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::NoRecords { .. }
            | Error::Domain(_)
            | Error::Parameter(_)
            | Error::Dimension(_)
            | Error::Config(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
