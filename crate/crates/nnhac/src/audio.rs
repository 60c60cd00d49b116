//! Mono WAV input (16-bit integer or 32-bit float) and 32-bit float output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonoAudio {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

pub fn read_mono(path: &Path) -> Result<MonoAudio> {
    let reader = WavReader::open(path).map_err(|e| Error::data(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(
            path,
            format!("{} channels; only mono input is supported", spec.channels),
        ));
    }
    let to_err = |e: hound::Error| Error::data(path, e.to_string());
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(to_err)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(to_err)?,
        (format, bits) => {
            return Err(Error::data(
                path,
                format!(
                "unsupported sample format {format:?} {bits}-bit; use 16-bit PCM or 32-bit float"
            ),
            ))
        }
    };
    Ok(MonoAudio {
        sample_rate: spec.sample_rate,
        samples,
    })
}

pub fn write_mono_f32(path: &Path, sample_rate: u32, samples: &[f64]) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let to_err = |e: hound::Error| Error::data(path, e.to_string());
    let mut writer = WavWriter::create(path, spec).map_err(to_err)?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Writes 16-bit PCM; used to produce test inputs.
pub fn write_mono_i16(path: &Path, sample_rate: u32, samples: &[f64]) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let to_err = |e: hound::Error| Error::data(path, e.to_string());
    let mut writer = WavWriter::create(path, spec).map_err(to_err)?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}
