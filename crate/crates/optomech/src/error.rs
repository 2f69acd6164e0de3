use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use optomech_core::Error as CoreError;

/// Exit codes of the command-line tool.
pub const EXIT_OK: u8 = 0;
pub const EXIT_OUTPUT: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    InputIo { path: PathBuf, source: io::Error },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String, path: Option<PathBuf> },

    #[error("{source}")]
    Core { source: CoreError, context: Option<String> },

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn input_io(path: &Path, source: io::Error) -> Self {
        CliError::InputIo { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, e: &serde_json::Error) -> Self {
        CliError::Parse { path: path.to_path_buf(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    pub fn validation(field: &str, reason: &str) -> Self {
        CliError::Validation { field: field.to_string(), reason: reason.to_string(), path: None }
    }

    pub fn from_core(source: CoreError) -> Self {
        match source {
            CoreError::Invalid { field, reason } => CliError::Validation { field, reason, path: None },
            source => CliError::Core { source, context: None },
        }
    }

    /// Qualify a field name with the block it came from.
    pub fn with_prefix(self, prefix: &str) -> Self {
        match self {
            CliError::Validation { field, reason, path } => {
                CliError::Validation { field: format!("{prefix}.{field}"), reason, path }
            }
            CliError::Core { source, context: None } => CliError::Core { source, context: Some(prefix.to_string()) },
            e => e,
        }
    }

    pub fn with_path(self, p: &Path) -> Self {
        match self {
            CliError::Validation { field, reason, .. } => CliError::Validation { field, reason, path: Some(p.to_path_buf()) },
            e => e,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InputIo { .. } | CliError::Parse { .. } | CliError::Validation { .. } | CliError::Usage(_) => {
                EXIT_VALIDATION
            }
            CliError::Core { source, .. } if source.is_validation() => EXIT_VALIDATION,
            CliError::Core { .. } => EXIT_NUMERICAL,
            CliError::Output { .. } => EXIT_OUTPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::InputIo { .. } => "InputIo",
            CliError::Parse { .. } => "Parse",
            CliError::Validation { .. } => "Validation",
            CliError::Core { source, .. } => source.kind(),
            CliError::Output { .. } => "Output",
            CliError::Usage(_) => "Usage",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("error".into(), json!(self.kind()));
        m.insert("exit_code".into(), json!(self.exit_code()));
        m.insert("message".into(), json!(self.to_string()));
        match self {
            CliError::InputIo { path, .. } | CliError::Output { path, .. } => {
                m.insert("path".into(), json!(path));
            }
            CliError::Parse { path, line, column, .. } => {
                m.insert("path".into(), json!(path));
                m.insert("line".into(), json!(line));
                m.insert("column".into(), json!(column));
            }
            CliError::Validation { field, path, .. } => {
                m.insert("field".into(), json!(field));
                if let Some(p) = path {
                    m.insert("path".into(), json!(p));
                }
            }
            CliError::Core { context: Some(c), .. } => {
                m.insert("context".into(), json!(c));
            }
            _ => {}
        }
        Value::Object(m)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core(e)
    }
}
