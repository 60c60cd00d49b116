#![no_std]
// NaN-rejecting checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Block-linear hearing-aid core driven by a prescription neural network.
//!
//! The signal path is:
//!
//! 1. [`filterbank`]: log-spaced, brick-wall, linear-phase FIR bands designed on a DFT grid.
//! 2. [`slm`]: per-band block level in dB SPL.
//! 3. [`prescription`]: a small MLP mapping band levels to band gains, with training,
//!    function-preserving widening and anchored personalization.
//! 4. [`pipeline`]: gain application, band summation and half-window overlap-add, plus a
//!    per-sample compressor baseline for comparison.
//!
//! Everything here is allocation-backed but free of IO; file formats and the command line
//! live in the `nnhac` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod filterbank;
pub mod pipeline;
pub mod prescription;
pub mod slm;

pub use crate::error::{Error, Result};
pub use crate::filterbank::{BandSpec, FilterBank, FilterBankSpec, FirFilter, FirStream};
pub use crate::pipeline::{
    make_window, BlockProcessor, Engine, GainRecord, GainTrace, LevelTracker, TrackerConfig,
};
pub use crate::prescription::{
    Activation, CompressorRule, Mlp, Normalization, TrainOutcome, TrainerConfig, TrainingSet,
};
pub use crate::slm::{BandLevels, Estimator, SlmConfig};
