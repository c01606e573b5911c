use std::io;

use ggmeval::Error as CoreError;

/// Failure of a CLI command, tagged with the stage that failed.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
    #[error("{stage}: {source}")]
    Io {
        stage: &'static str,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core { source, .. } => match source {
                CoreError::Argument(_) | CoreError::Config(_) => 2,
                CoreError::Load { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}

/// Attach a stage name to fallible results.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, CoreError> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { stage, source })
    }
}

impl<T> Stage<T> for Result<T, io::Error> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Io { stage, source })
    }
}
