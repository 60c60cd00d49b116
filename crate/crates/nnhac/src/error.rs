use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{path}: malformed model: {message}")]
    MalformedModel { path: PathBuf, message: String },
    #[error("input sample rate {got} Hz differs from the filter bank rate {expected} Hz; resample the input first")]
    SampleRate { expected: u32, got: u32 },
    #[error(transparent)]
    Core(#[from] nnhac_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage/config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use nnhac_core::Error as Core;
        match self {
            Self::Config(_) => 1,
            Self::Core(Core::Diverged { .. }) => 3,
            Self::Core(Core::Spec(_) | Core::InvalidBand { .. }) => 1,
            _ => 2,
        }
    }
}
