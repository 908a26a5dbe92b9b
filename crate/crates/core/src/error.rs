use thiserror::Error;

use crate::types::UserId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("user {0} is not on the scoreboard")]
    UnknownUser(UserId),

    #[error("duplicate user {0}")]
    DuplicateUser(UserId),

    #[error("ballot from {voter} targets {found}, expected {expected}")]
    MixedTargets {
        voter: UserId,
        expected: UserId,
        found: UserId,
    },

    #[error("voter {voter} cast more than one ballot on {target}")]
    DuplicateBallot { voter: UserId, target: UserId },

    #[error("label and truth maps cover different users")]
    KeyMismatch,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("score pool has no entries for {0}")]
    EmptyPool(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
