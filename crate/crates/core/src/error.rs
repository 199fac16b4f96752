use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Every propagation path between a base station and a user is blocked.
    #[error("all paths blocked between base station {bs} and user at {location:?}")]
    EmptyPathSet { bs: usize, location: [f64; 3] },

    #[error("scene misconfigured: {shadowed} of {users} users fully shadowed toward base station {bs}")]
    SceneMisconfigured { bs: usize, shadowed: usize, users: usize },

    #[error("channel {index} has (near) zero norm")]
    ZeroChannel { index: usize },

    #[error("neighbor graph is disconnected; component sizes {component_sizes:?}")]
    DisconnectedGraph { component_sizes: Vec<usize> },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("precoder {index} has (near) zero norm")]
    ZeroPrecoder { index: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("variant {variant}: {source}")]
    Variant {
        variant: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },
}

impl Error {
    /// True for failures of the numerics rather than of inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EmptyPathSet { .. }
            | Error::ZeroChannel { .. }
            | Error::DisconnectedGraph { .. }
            | Error::ConvergenceFailure { .. }
            | Error::ZeroPrecoder { .. }
            | Error::NonFiniteLoss { .. } => true,
            Error::Variant { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::SceneMisconfigured { .. } => true,
            Error::Variant { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Artifact { path: path.into(), reason: reason.into() }
    }
}
