use std::fmt;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad config, bad input files, violated preconditions: exit 1.
    User,
    /// A broken internal invariant: exit 2.
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::User, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Internal, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::User => 1,
            ErrorKind::Internal => 2,
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.message,
            "kind": match self.kind { ErrorKind::User => "user", ErrorKind::Internal => "internal" },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }

    /// Prefix the message with what was being done.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<dvlae_core::Error> for CliError {
    fn from(e: dvlae_core::Error) -> Self {
        Self::user(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::user(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attach a path to I/O failures.
pub trait PathContext<T> {
    fn with_path(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T, E: fmt::Display> PathContext<T> for Result<T, E> {
    fn with_path(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| CliError::user(format!("{}: {e}", path.display())))
    }
}
