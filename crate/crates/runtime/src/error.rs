use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Core(#[from] flowbal_core::Error),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("wire format: {0}")]
    Wire(String),
}

impl RuntimeError {
    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        RuntimeError::Protocol(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        RuntimeError::Config(msg.into())
    }
}

pub type Result<T, E = RuntimeError> = std::result::Result<T, E>;
