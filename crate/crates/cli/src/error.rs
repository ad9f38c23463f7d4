use fhn_core::FhnError;
use thiserror::Error;

/// Failures of a CLI run, each tied to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Divergence, non-convergence or a tolerance that could not be met.
    #[error("{stage}: {detail}")]
    Numerical { stage: String, detail: String },

    /// A constraint on the configuration or its data.
    #[error("config: {0}")]
    Config(String),

    #[error("certification failed: {0}")]
    Certification(String),

    /// Missing or unreadable input, unwritable output.
    #[error("file: {0}")]
    MissingFile(String),

    #[error("syntax: {0}")]
    Syntax(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Certification(_) => 3,
            CliError::MissingFile(_) => 4,
            CliError::Syntax(_) => 5,
        }
    }

    /// Prefixes the message with `what`, keeping the variant.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Numerical { stage, detail } => CliError::Numerical {
                stage: format!("{what}: {stage}"),
                detail,
            },
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Certification(m) => CliError::Certification(format!("{what}: {m}")),
            CliError::MissingFile(m) => CliError::MissingFile(format!("{what}: {m}")),
            CliError::Syntax(m) => CliError::Syntax(format!("{what}: {m}")),
        }
    }

    /// Classifies a library error raised while running `stage`.
    pub fn from_core(stage: &str, e: FhnError) -> Self {
        match e {
            FhnError::Config(_) | FhnError::Regime(_) | FhnError::Domain { .. } | FhnError::Shape(_) => {
                CliError::Config(format!("{stage}: {e}"))
            }
            FhnError::ToleranceNotMet { .. }
            | FhnError::Truncation { .. }
            | FhnError::NotConverged { .. }
            | FhnError::Divergence { .. } => CliError::Numerical {
                stage: stage.to_string(),
                detail: e.to_string(),
            },
        }
    }
}
