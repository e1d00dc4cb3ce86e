use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsdcError {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A request outside what the built-in constructions support.
    #[error("unsupported: {0}")]
    Capability(String),

    /// A configuration value that cannot be used to run a session.
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A protocol step was invoked out of order or on the wrong slot.
    #[error("protocol order violation: {0}")]
    ProtocolOrder(String),

    /// A user or server id that does not exist.
    #[error("unknown id: {0}")]
    Lookup(String),

    /// A topology or route that breaks a structural rule.
    #[error("validation error: {0}")]
    Validation(String),

    /// A transcript that cannot be parsed or does not replay.
    #[error("transcript error: {0}")]
    Transcript(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl QsdcError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        QsdcError::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        QsdcError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn order(msg: impl Into<String>) -> Self {
        QsdcError::ProtocolOrder(msg.into())
    }

    pub(crate) fn transcript(msg: impl Into<String>) -> Self {
        QsdcError::Transcript(msg.into())
    }
}

impl From<std::io::Error> for QsdcError {
    fn from(e: std::io::Error) -> Self {
        QsdcError::Io(e.to_string())
    }
}

pub type Result<T, E = QsdcError> = std::result::Result<T, E>;
