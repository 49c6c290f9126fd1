use std::path::Path;

use mghd_core::Error;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io {
        path: String,
        message: String,
    },
    Usage(String),
    /// A `check` ran to completion and at least one test failed.
    CheckFailed(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// 2 for unusable input (scenario, flags, seed profile), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Seed(_) | Error::Config(_) | Error::CflViolation(_)) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let body = match self {
            CliError::Core(e) => {
                let mut v = json!({ "code": e.code(), "message": e.to_string() });
                if let Error::Seed(s) = e {
                    v["condition"] = json!(s.condition.name());
                    v["location"] = json!(s.location);
                    v["margin"] = json!(s.margin);
                    v["detail"] = json!(s.detail);
                }
                v
            }
            CliError::Io { path, message } => json!({ "code": "Io", "message": message, "path": path }),
            CliError::Usage(m) => json!({ "code": "Usage", "message": m }),
            CliError::CheckFailed(m) => json!({ "code": "CheckFailed", "message": m }),
        };
        json!({ "error": body, "exit_code": self.exit_code() })
    }
}
