use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver backend error: {0}")]
    Solver(String),

    #[error("{context}: solver returned status {status:?}")]
    SolveStatus {
        context: String,
        status: crate::solver::SolveStatus,
    },

    #[error("infeasible column for generator {generator}: {reason}")]
    InfeasibleColumn { generator: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
