use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid example `{id}`: {reason}")]
    InvalidExample { id: String, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unnegatable hypothesis `{0}`")]
    Unnegatable(String),

    #[error("example kind does not match the model (model expects {expected})")]
    KindMismatch { expected: &'static str },

    #[error(
        "model has {params} parameters, above the dense Hessian cap of {cap}; \
         use the Hessian-vector product path instead"
    )]
    HessianTooLarge { params: usize, cap: usize },

    #[error(
        "training diverged at step {step} (objective is not finite); try a smaller learning_rate"
    )]
    Diverged { step: usize },

    #[error("damped Hessian is not positive definite (damping {damping}); try a larger damping")]
    NotPositiveDefinite { damping: f64 },

    #[error(
        "LiSSA recursion is not contractive: estimated largest eigenvalue {max_eigenvalue:.4e} \
         divided by scale {scale:.4e} is not below 1"
    )]
    NotContractive { max_eigenvalue: f64, scale: f64 },

    #[error("LiSSA recursion became non-finite at step {step}; increase scale or damping")]
    NonFiniteRecursion { step: usize },

    #[error("removing the requested examples leaves class {0} with no training data")]
    ClassEliminated(usize),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
