use std::io;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("orbit diverged at step {step}")]
    Divergent { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("value is not finite")]
    NonFinite,

    #[error("key rejected: orbit diverged at step {step}")]
    KeyRejected { step: usize },

    #[error("image: {0}")]
    Image(String),

    #[error("pnm: {0}")]
    Pnm(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
