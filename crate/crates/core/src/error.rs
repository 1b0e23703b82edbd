use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),
    #[error("time {time} outside trajectory domain [0, {duration}]")]
    TimeOutOfDomain { time: f64, duration: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("memory is empty")]
    EmptyMemory,
    #[error("episode index {got} does not follow {last}")]
    DuplicateIndex { got: u64, last: u64 },
    #[error("degenerate goal: goal coincides with the origin outcome")]
    DegenerateGoal,
    #[error("no attempts recorded for this goal")]
    MissingAttempts,
    #[error("goal ({x}, {y}) lies outside the task space")]
    OutOfBounds { x: f64, y: f64 },
    #[error("objective returned a non-finite value twice at the same vertex")]
    NonFiniteObjective,
    #[error("demonstration set error: {0}")]
    Demonstrations(String),
    #[error("benchmark resolution error: {0}")]
    Resolution(String),
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
