use thiserror::Error;

/// Exit status for a configuration or usage error.
pub const EXIT_CONFIG: u8 = 1;
/// Exit status when the solver stopped before the end of the time span.
pub const EXIT_SOLVER: u8 = 2;
/// Exit status when a verification suite reports a failure.
pub const EXIT_CHECK: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Model(dirac_thermo::Error),

    #[error("solver error: {0}")]
    Solver(dirac_thermo::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }

    pub(crate) fn model(e: dirac_thermo::Error) -> Self {
        CliError::Model(e)
    }

    pub(crate) fn io(e: std::io::Error, path: &std::path::Path) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        }
    }
}
