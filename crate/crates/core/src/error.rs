use thiserror::Error;

/// Errors raised by the laboratory's operations.
///
/// The split matters to callers: `Invalid` and `Domain` mean the request
/// itself was malformed (bad arguments, out-of-range evaluation), while
/// `Guard` means a numerical safety check tripped during an otherwise valid
/// computation (Wronskian drift, singular basis matrix, width collapse,
/// untrusted grid moments).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed argument or configuration.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// Evaluation outside the configured domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical guard tripped; `module` names the subsystem.
    #[error("numerical guard tripped in {module}: {message}")]
    Guard {
        module: &'static str,
        message: String,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn guard(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Guard {
            module,
            message: msg.into(),
        }
    }
}
