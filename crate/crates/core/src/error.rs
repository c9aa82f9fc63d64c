use thiserror::Error;

use crate::accoracle::OracleError;
use crate::hwmodel::HwError;
use crate::netgraph::NetError;
use crate::replicate::ReplicateError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error. Each variant maps onto a distinct process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetError),
    #[error(transparent)]
    Hardware(#[from] HwError),
    #[error(transparent)]
    Replicate(#[from] ReplicateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A parse or validation error inside a named input file.
    #[error("{path}: {source}")]
    InFile { path: String, source: Box<Error> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn in_file(path: impl Into<String>, source: impl Into<Error>) -> Self {
        Error::InFile { path: path.into(), source: Box::new(source.into()) }
    }

    /// Process exit code: 3 parse/validation, 4 infeasible, 5 oracle, 6 resource
    /// limit, 1 I/O. Clap reserves 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::InFile { source, .. } => source.exit_code(),
            Error::Network(_) | Error::Policy(_) | Error::Config(_) => 3,
            Error::Hardware(HwError::Infeasible { .. }) => 4,
            Error::Hardware(_) => 3,
            Error::Replicate(e) => match e {
                ReplicateError::Infeasible { .. } => 4,
                ReplicateError::SearchSpaceTooLarge { .. } | ReplicateError::IterationLimit { .. } => 6,
                ReplicateError::InvalidInstance(_) => 3,
            },
            Error::Oracle(OracleError::NotConfigured(_)) => 3,
            Error::Oracle(_) => 5,
        }
    }
}
