use std::path::PathBuf;

use nalgebra::DVector;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("requested {requested} modes but the snapshot matrix has numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Newton iteration did not converge in {iterations} steps (last step norm {last_step:.3e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        last_iterate: DVector<f64>,
    },

    #[error("Hessian is singular even after Tikhonov shift {shift:.3e}")]
    SingularHessian { shift: f64 },

    #[error("penalty parameter exceeded cap {cap:.3e} with penalty {penalty:.3e} still above tolerance; constraint set is likely empty for this basis")]
    Infeasible { cap: f64, penalty: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Short machine-readable category, printed by the CLI next to the message.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Validation(_) | Error::NonFinite { .. } | Error::Dimension(_) => "invalid-input",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::NonConvergence { .. } | Error::SingularHessian { .. } => "numerical",
            Error::Infeasible { .. } => "infeasible",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }

    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::NonFinite { .. } | Error::Dimension(_) => 3,
            Error::RankDeficient { .. } => 4,
            Error::NonConvergence { .. } | Error::SingularHessian { .. } => 5,
            Error::Infeasible { .. } => 6,
            Error::Io { .. } => 7,
            Error::Format { .. } => 8,
        }
    }
}
