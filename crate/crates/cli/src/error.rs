use std::path::{Path, PathBuf};

use serde::Serialize;

use tabqa_core::{GenerationError, HtmlError, ProviderError, RetrievalError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A record in an input file does not fit its schema.
    #[error("{}{}: {message}", file.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Input {
        file: PathBuf,
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    /// Some work items failed; their outputs were still written.
    #[error("{failed} of {total} items failed: {}", ids.join(", "))]
    Partial {
        failed: usize,
        total: usize,
        ids: Vec<String>,
    },
}

/// The JSON object written to stderr when a command fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(file: &Path, line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Input {
            file: file.to_path_buf(),
            line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn html(file: &Path, line: usize, source: HtmlError) -> Self {
        Self::input(file, Some(line), Some("table_html"), source.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input { .. } => "input",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Provider(_) => "provider",
            CliError::Retrieval(_) => "retrieval",
            CliError::Generation(_) => "generation",
            CliError::Partial { .. } => "partial",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Partial { .. } => 3,
            CliError::Input { .. } | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (file, line, field, message) = match self {
            CliError::Input {
                file,
                line,
                field,
                message,
            } => (Some(file.display().to_string()), *line, field.clone(), message.clone()),
            CliError::Io { path, source } => (Some(path.display().to_string()), None, None, source.to_string()),
            other => (None, None, None, other.to_string()),
        };
        ErrorReport {
            error: self.kind(),
            message,
            file,
            line,
            field,
        }
    }
}
