use std::path::PathBuf;

use thiserror::Error;

use crate::components::Infeasible;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("query ({x}, {y}) outside map bounds")]
    OutOfRange { x: f64, y: f64 },

    /// The plant cannot follow the mission at the given step.
    #[error("mission infeasible at step {step}: {reason}")]
    MissionInfeasible { step: usize, reason: Infeasible },

    #[error("dynamic programming: no finite cost-to-go at the first stage")]
    AllInfeasible,

    #[error("dynamic programming: no feasible control at stage {stage}")]
    DeadEnd { stage: usize },

    #[error("no candidate transmission ratio keeps the motor inside its envelope")]
    NoFeasibleRatio,

    #[error("trajectory verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by the physics rather than by bad input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::MissionInfeasible { .. }
                | Error::AllInfeasible
                | Error::DeadEnd { .. }
                | Error::NoFeasibleRatio
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
