#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! File formats, WAV streaming and the command-line front end for `nnhac-core`.

pub mod audio;
pub mod commands;
pub mod config;
pub mod dataset;
mod error;
pub mod model_file;
pub mod process;
pub mod trace;

pub use crate::error::{Error, Result};
