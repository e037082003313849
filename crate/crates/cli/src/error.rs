use std::path::{Path, PathBuf};

/// Runner failures. Exit status: 2 configuration, 3 post-selection failure,
/// 4 integration error, 1 anything else.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{place}: {message}")]
    Config { place: String, message: String },

    #[error("{experiment}: {source}")]
    Experiment {
        experiment: &'static str,
        #[source]
        source: phonon_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Core failures before the runner attaches the experiment name.
impl From<phonon_core::Error> for CliError {
    fn from(source: phonon_core::Error) -> Self {
        CliError::Experiment { experiment: "", source }
    }
}

impl CliError {
    pub fn config(place: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            place: place.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Names the experiment on errors raised by the core.
    pub(crate) fn within(self, name: &'static str) -> Self {
        match self {
            CliError::Experiment { source, .. } => CliError::Experiment { experiment: name, source },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Experiment { source, .. } => match source {
                phonon_core::Error::PostSelection(_) => 3,
                phonon_core::Error::Integration(_) => 4,
                phonon_core::Error::InvalidParameter { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}
