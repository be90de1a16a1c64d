use serde::Serialize;
use typlab::Error;

/// A failed run, classified by exit status.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Failure {
    /// Malformed or out-of-range input. Exit 2.
    Usage { key: Option<String>, message: String },
    /// A numerical routine failed on valid input. Exit 3.
    Numerical { message: String },
    /// Filesystem trouble while writing artifacts. Exit 1.
    Io { message: String },
}

impl Failure {
    pub fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::Usage {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn io(context: &str, e: impl std::fmt::Display) -> Self {
        Failure::Io {
            message: format!("{context}: {e}"),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage { .. } => 2,
            Failure::Numerical { .. } => 3,
            Failure::Io { .. } => 1,
        }
    }

    #[cfg(test)]
    pub fn key(&self) -> Option<&str> {
        match self {
            Failure::Usage { key, .. } => key.as_deref(),
            _ => None,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage {
                key: Some(key),
                message,
            } => write!(f, "invalid `{key}`: {message}"),
            Failure::Usage { key: None, message } => write!(f, "{message}"),
            Failure::Numerical { message } => write!(f, "numerical failure: {message}"),
            Failure::Io { message } => write!(f, "i/o error: {message}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            return Failure::Numerical { message: e.to_string() };
        }
        let key = match &e {
            Error::InvalidParameter { name, .. } => Some(format!("params.{name}")),
            Error::EmptyWindow { .. } => Some("params.window_delta".to_string()),
            _ => None,
        };
        Failure::Usage {
            key,
            message: e.to_string(),
        }
    }
}

/// Body of `error.json`.
#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub schema: &'static str,
    pub exit_code: u8,
    #[serde(flatten)]
    pub failure: &'a Failure,
}

impl<'a> ErrorRecord<'a> {
    pub const SCHEMA: &'static str = "error/1";

    pub fn new(failure: &'a Failure) -> Self {
        ErrorRecord {
            schema: Self::SCHEMA,
            exit_code: failure.exit_code(),
            failure,
        }
    }
}
