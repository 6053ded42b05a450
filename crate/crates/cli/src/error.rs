use serde_json::{json, Value};
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration value is missing, unknown or out of range.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] gravcorr::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { .. } => "validation",
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(gravcorr::Error::Domain { .. }) => "domain",
            CliError::Core(gravcorr::Error::Config(_)) => "config",
            CliError::Core(gravcorr::Error::Quadrature { .. }) => "quadrature",
            CliError::Core(gravcorr::Error::NonPhysical(_)) => "non_physical",
            CliError::Core(gravcorr::Error::TooManySamples { .. }) => "too_many_samples",
        }
    }

    /// Input problems exit with 2, computational failures with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Core(gravcorr::Error::Domain { .. }) => 2,
            _ => 1,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            CliError::Validation { field, .. } => Some(field),
            CliError::Core(gravcorr::Error::Domain { field, .. }) => Some(field),
            _ => None,
        }
    }

    /// `{"error": {"kind", "message", "field"?}}`, written to stderr.
    pub fn to_json(&self) -> Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let Some(field) = self.field() {
            body["field"] = Value::String(field.to_string());
        }
        json!({ "error": body })
    }
}
