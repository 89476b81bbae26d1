use std::path::PathBuf;

use duhem_core::Error as CoreError;

/// Exit status contract: 0 pass, 1 checks failed, 2 usage or config error.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown example id `{id}`; valid ids: {valid}")]
    UnknownId { id: String, valid: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// Malformed input maps to 2; numerical failures during a run map to 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                CoreError::Blowup { .. }
                | CoreError::AlgebraicLoopSingular { .. }
                | CoreError::NoIntersect { .. }
                | CoreError::NoRoot { .. }
                | CoreError::UnverifiedCertificate,
            ) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
