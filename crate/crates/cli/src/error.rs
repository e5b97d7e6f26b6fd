use std::fmt;

use gridmap::{Error, ErrorKind};
use thiserror::Error;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Network,
    Snake,
    Grid,
    Quality,
    Output,
    Render,
    Bench,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Network => "network",
            Stage::Snake => "snake",
            Stage::Grid => "grid",
            Stage::Quality => "quality",
            Stage::Output => "output",
            Stage::Render => "render",
            Stage::Bench => "bench",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Cause {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An error tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("stage {stage}: {cause}")]
pub struct StageError {
    pub stage: Stage,
    /// Shown inline by `Display`, so not exposed as the error source.
    pub cause: Cause,
}

impl StageError {
    pub fn new(stage: Stage, cause: impl Into<Cause>) -> Self {
        StageError {
            stage,
            cause: cause.into(),
        }
    }

    pub fn input(stage: Stage, msg: impl Into<String>) -> Self {
        StageError {
            stage,
            cause: Cause::Input(msg.into()),
        }
    }

    /// 2 for bad input or I/O, 3 for numerical failure, 4 for an infeasible grid.
    pub fn exit_code(&self) -> i32 {
        match &self.cause {
            Cause::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Infeasible => 4,
            },
            Cause::Input(_) | Cause::Io(_) => 2,
        }
    }
}

/// Tags a result's error with a stage.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<Cause>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError::new(stage, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let e = StageError::new(Stage::Load, Error::Parse("x".into()));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(e.to_string(), "stage load: failed to parse input: x");
        let e = StageError::new(Stage::Snake, Error::Numerical("x".into()));
        assert_eq!(e.exit_code(), 3);
        let e = StageError::new(
            Stage::Grid,
            Error::InfeasibleGrid {
                needed: 3,
                available: 2,
            },
        );
        assert_eq!(e.exit_code(), 4);
        let e = StageError::new(Stage::Output, std::io::Error::other("disk"));
        assert_eq!(e.exit_code(), 2);
    }
}
