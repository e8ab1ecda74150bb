//! Crate-level error type and exit-code classification.

use thiserror::Error;

/// Top-level error wrapping every module's failure modes.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
    #[error(transparent)]
    Suggest(#[from] crate::suggest::SuggestError),
    #[error(transparent)]
    Stance(#[from] crate::stance::StanceError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for transport failures, 1 for
    /// everything else (validation, integrity, io).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Gateway(g) if g.is_transport() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
