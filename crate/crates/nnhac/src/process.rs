use std::path::Path;
use std::time::Instant;

use nnhac_core::{BlockProcessor, Engine};
use serde::Serialize;

use crate::audio::{read_mono, write_mono_f32};
use crate::trace::write_gain_trace;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub engine: &'static str,
    pub sample_rate_hz: u32,
    pub samples: usize,
    pub blocks: usize,
    pub latency_samples: usize,
    pub peak_input_dbfs: f64,
    pub peak_output_dbfs: f64,
    pub audio_seconds: f64,
    pub wall_seconds: f64,
    pub real_time_factor: f64,
}

fn peak_dbfs(x: &[f64]) -> f64 {
    let peak = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        20.0 * peak.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Streams a mono WAV file through `processor` and writes a 32-bit float WAV of the same
/// length, delayed by the filter bank's `N/2` samples. The gain trace is written when
/// `trace` is given.
pub fn process_file(
    mut processor: BlockProcessor,
    input: &Path,
    output: &Path,
    trace: Option<&Path>,
) -> Result<Summary> {
    let audio = read_mono(input)?;
    let expected = processor.sample_rate_hz();
    if f64::from(audio.sample_rate) != expected {
        return Err(Error::SampleRate {
            expected: expected as u32,
            got: audio.sample_rate,
        });
    }
    let start = Instant::now();
    let out = processor.process_aligned(&audio.samples)?;
    let wall = start.elapsed().as_secs_f64();

    write_mono_f32(output, audio.sample_rate, &out)?;
    if let Some(path) = trace {
        write_gain_trace(path, processor.trace())?;
    }
    let audio_seconds = audio.samples.len() as f64 / f64::from(audio.sample_rate);
    Ok(Summary {
        engine: match processor.engine() {
            Engine::Neural(_) => "neural",
            Engine::Compressor { .. } => "baseline",
        },
        sample_rate_hz: audio.sample_rate,
        samples: out.len(),
        blocks: processor.trace().len(),
        latency_samples: processor.hop(),
        peak_input_dbfs: peak_dbfs(&audio.samples),
        peak_output_dbfs: peak_dbfs(&out),
        audio_seconds,
        wall_seconds: wall,
        real_time_factor: if wall > 0.0 {
            audio_seconds / wall
        } else {
            f64::INFINITY
        },
    })
}
