use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent mesh, ring or array layout.
    #[error("structural error: {0}")]
    Structural(String),

    /// A geometric or topological constraint of the ring construction is violated.
    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("twisted space-time element {element}: {detail}")]
    TwistedElement { element: usize, detail: String },

    #[error("no active moving elements remain, the computational domain vanished")]
    DomainVanished,

    #[error("singular matrix: zero pivot at dof {dof}")]
    SingularMatrix { dof: usize },

    #[error("linear solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    LinearNotConverged { iterations: usize, residual: f64 },

    #[error("newton iteration failed at step {step}: {reason}")]
    NewtonFailed { step: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
