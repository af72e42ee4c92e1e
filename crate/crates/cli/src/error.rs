use thiserror::Error;

/// Failures surfaced by the front-end, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Config { line, msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<fsocap_core::Error> for CliError {
    fn from(e: fsocap_core::Error) -> Self {
        match e {
            fsocap_core::Error::Config(msg) => CliError::config(None, msg),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
