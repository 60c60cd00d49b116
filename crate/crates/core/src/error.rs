use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("band index {index} out of range for a {bands}-band bank")]
    InvalidBand { index: usize, bands: usize },
    #[error("invalid filter bank: {0}")]
    Spec(String),
    #[error("sample rate {got} Hz does not match the filter bank rate {expected} Hz")]
    SampleRate { expected: f64, got: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid training setup: {0}")]
    Training(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("{0}")]
    Unsupported(String),
}
