use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] faf_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{failed} of {total} self-test checks failed")]
    SelfTest { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Core(faf_core::Error::Capacity { .. }) => "capacity",
            CliError::Core(faf_core::Error::InvalidArgument(_)) => "invalid-argument",
            CliError::Core(_) => "numerical",
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => "io",
            CliError::SelfTest { .. } => "selftest",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "invalid-argument" => 2,
            "capacity" => 3,
            _ => 1,
        }
    }

    /// One-line JSON form written to stderr on failure.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            hint: Option<&'a str>,
        }
        let hint = matches!(self.kind(), "config" | "invalid-argument")
            .then_some("run `fafsim config --print-defaults` for the configuration schema");
        serde_json::to_string(&Line {
            error: self.kind(),
            message: self.to_string(),
            hint,
        })
        .expect("error line serializes")
    }
}
