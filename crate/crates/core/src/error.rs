use thiserror::Error;

/// Errors produced by the grid map pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse input: {0}")]
    Parse(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "infeasible grid: {needed} cells required but only {available} intersect the boundary"
    )]
    InfeasibleGrid { needed: usize, available: usize },

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Broad category used to pick process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_)
            | Error::UnsupportedTopology(_)
            | Error::Validation(_)
            | Error::DegenerateGeometry(_)
            | Error::UnknownNode(_) => ErrorKind::Input,
            Error::Numerical(_) | Error::Internal(_) => ErrorKind::Numerical,
            Error::InfeasibleGrid { .. } => ErrorKind::Infeasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
