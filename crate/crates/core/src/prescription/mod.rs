//! Prescription network: the mapping from band levels (dB SPL) to band gains (dB).
//!
//! [`Mlp`] is the network itself. [`CompressorRule`] is a per-band wide dynamic range
//! compression law used as a training oracle and by the compressor baseline. The
//! [`train`] / [`personalize`] functions fit a network with momentum SGD, the latter
//! anchored to a starting prescription so user preferences deform it rather than replace it.

mod mlp;
mod rule;
mod train;

pub use self::mlp::{Activation, Layer, Mlp, Normalization};
pub use self::rule::{BandRule, CompressorRule};
pub use self::train::{
    loss_and_gradient, max_abs_error_db, personalize, train, TrainOutcome, TrainerConfig,
    TrainingSet,
};
