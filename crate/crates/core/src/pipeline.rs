//! Block-linear hearing-aid pipeline and the per-sample compressor baseline.
//!
//! Each step takes `N/2` new samples, updates the `N`-sample band blocks of the current
//! frame, chooses band gains, sums the gained bands into `y` and overlap-adds it with the
//! previous frame through a periodic Hann window:
//!
//! ```text
//! r[i] = y_prev[N/2 + i] * w[N/2 + i] + y[i] * w[i],   0 <= i < N/2
//! ```
//!
//! With the neural engine one gain per band is held for the whole frame, so every frame is
//! a linear map of the input. The compressor engine instead updates its gains every sample
//! from an attack/release envelope, as a conventional compressor core does.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::filterbank::{convolve_valid, FilterBank};
use crate::prescription::{CompressorRule, Mlp};
use crate::slm::{BandLevels, SlmConfig};
use crate::{Error, Result};

/// Periodic Hann window of even length `n`. The second half is written as the complement
/// of the first so that `w[i] + w[i + n/2] == 1`.
pub fn make_window(n: usize) -> Result<Vec<f64>> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Spec(format!(
            "window length {n} must be even and positive"
        )));
    }
    let half = n / 2;
    let mut w = vec![0.0; n];
    for i in 0..half {
        w[i] = 0.5 * (1.0 - libm::cos(2.0 * PI * i as f64 / n as f64));
        w[i + half] = 1.0 - w[i];
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub attack_ms: f64,
    pub release_ms: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            attack_ms: 5.0,
            release_ms: 50.0,
        }
    }
}

/// One-pole attack/release envelope of `|x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTracker {
    level: f64,
    attack: f64,
    release: f64,
}

impl LevelTracker {
    pub fn new(cfg: TrackerConfig, sample_rate_hz: f64) -> Result<Self> {
        if !(cfg.attack_ms > 0.0) || !(cfg.release_ms > 0.0) {
            return Err(Error::Spec(format!(
                "attack and release must be positive, got {} ms / {} ms",
                cfg.attack_ms, cfg.release_ms
            )));
        }
        let coeff = |ms: f64| libm::exp(-1.0 / (sample_rate_hz * ms * 1e-3));
        Ok(Self {
            level: 0.0,
            attack: coeff(cfg.attack_ms),
            release: coeff(cfg.release_ms),
        })
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let mag = x.abs();
        let a = if mag > self.level {
            self.attack
        } else {
            self.release
        };
        self.level = a * self.level + (1.0 - a) * mag;
        self.level
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn set_level(&mut self, level: f64) {
        self.level = level;
    }
}

/// Where per-band gains come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    /// Block levels from the meter, gains from the prescription network.
    Neural(Mlp),
    /// Per-sample gains from a compression rule driven by envelope trackers.
    Compressor {
        rule: CompressorRule,
        tracker: TrackerConfig,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRecord {
    pub block: usize,
    pub levels_db_spl: Vec<f64>,
    pub gains_db: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainTrace {
    pub records: Vec<GainRecord>,
}

impl GainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Streaming state for one mono signal.
#[derive(Debug, Clone)]
pub struct BlockProcessor {
    bank: FilterBank,
    slm: SlmConfig,
    engine: Engine,
    len: usize,
    hop: usize,
    reversed_taps: Vec<Vec<f64>>,
    /// last `N - 1` input samples followed by room for one hop
    history: Vec<f64>,
    band_blocks: Vec<Vec<f64>>,
    /// per-sample linear gains over the frame (compressor engine only)
    sample_gains: Vec<Vec<f64>>,
    trackers: Vec<LevelTracker>,
    y: Vec<f64>,
    y_prev: Vec<f64>,
    window: Vec<f64>,
    block: usize,
    trace: GainTrace,
    level_override: Option<BandLevels>,
}

impl BlockProcessor {
    pub fn new(bank: FilterBank, slm: SlmConfig, engine: Engine) -> Result<Self> {
        let bands = bank.num_bands();
        slm.validate(bands)?;
        let trackers = match &engine {
            Engine::Neural(mlp) => {
                mlp.validate()?;
                if mlp.input_dim() != bands {
                    return Err(Error::Model(format!(
                        "network prescribes {} bands but the filter bank has {bands}",
                        mlp.input_dim()
                    )));
                }
                Vec::new()
            }
            Engine::Compressor { rule, tracker } => {
                rule.validate()?;
                if rule.num_bands() != bands {
                    return Err(Error::Spec(format!(
                        "rule covers {} bands but the filter bank has {bands}",
                        rule.num_bands()
                    )));
                }
                let t = LevelTracker::new(*tracker, bank.spec.sample_rate_hz)?;
                vec![t; bands]
            }
        };
        let len = bank.filter_length();
        let hop = len / 2;
        let reversed_taps = bank
            .filters
            .iter()
            .map(|f| f.taps.iter().rev().copied().collect())
            .collect();
        Ok(Self {
            slm,
            engine,
            len,
            hop,
            reversed_taps,
            history: vec![0.0; len - 1],
            band_blocks: vec![vec![0.0; len]; bands],
            sample_gains: vec![vec![1.0; len]; bands],
            trackers,
            y: vec![0.0; len],
            y_prev: vec![0.0; len],
            window: make_window(len)?,
            block: 0,
            trace: GainTrace::default(),
            level_override: None,
            bank,
        })
    }

    pub fn filter_length(&self) -> usize {
        self.len
    }

    /// Samples consumed and produced per step, `N/2`.
    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bank.spec.sample_rate_hz
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn check_sample_rate(&self, sample_rate_hz: f64) -> Result<()> {
        if sample_rate_hz != self.sample_rate_hz() {
            return Err(Error::SampleRate {
                expected: self.sample_rate_hz(),
                got: sample_rate_hz,
            });
        }
        Ok(())
    }

    /// Replaces measured levels with a fixed vector, which freezes neural-engine gains.
    pub fn set_level_override(&mut self, levels: Option<BandLevels>) -> Result<()> {
        if let Some(l) = &levels {
            if l.len() != self.band_blocks.len() {
                return Err(Error::Shape(format!(
                    "override has {} levels for {} bands",
                    l.len(),
                    self.band_blocks.len()
                )));
            }
        }
        self.level_override = levels;
        Ok(())
    }

    pub fn trace(&self) -> &GainTrace {
        &self.trace
    }

    pub fn into_trace(self) -> GainTrace {
        self.trace
    }

    /// Band signals over the current `N`-sample frame.
    pub fn band_blocks(&self) -> &[Vec<f64>] {
        &self.band_blocks
    }

    /// Gained band sum over the current frame, before windowing.
    pub fn frame_output(&self) -> &[f64] {
        &self.y
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Consumes `N/2` samples and writes `N/2` overlap-added output samples.
    pub fn process_block(&mut self, input: &[f64], output: &mut [f64]) -> Result<GainRecord> {
        let (len, hop) = (self.len, self.hop);
        if input.len() != hop || output.len() != hop {
            return Err(Error::Shape(format!(
                "a block is {hop} samples; got {} in and {} out",
                input.len(),
                output.len()
            )));
        }

        self.history.extend_from_slice(input);
        for (block, taps) in self.band_blocks.iter_mut().zip(&self.reversed_taps) {
            block.copy_within(hop.., 0);
            convolve_valid(taps, &self.history, &mut block[hop..]);
        }
        self.history.drain(..hop);

        let record = match &self.engine {
            Engine::Neural(mlp) => {
                let levels = match &self.level_override {
                    Some(l) => l.clone(),
                    None => self.slm.measure(&self.band_blocks, len)?,
                };
                let gains_db = mlp.prescribe(&levels)?;
                self.y.iter_mut().for_each(|v| *v = 0.0);
                for (block, g) in self.band_blocks.iter().zip(&gains_db) {
                    let lin = libm::pow(10.0, g / 20.0);
                    for (y, b) in self.y.iter_mut().zip(block) {
                        *y += lin * b;
                    }
                }
                GainRecord {
                    block: self.block,
                    levels_db_spl: levels.0,
                    gains_db,
                }
            }
            Engine::Compressor { rule, .. } => {
                let bands = self.band_blocks.len();
                let mut levels_db_spl = Vec::with_capacity(bands);
                let mut gains_db = Vec::with_capacity(bands);
                for m in 0..bands {
                    let gains = &mut self.sample_gains[m];
                    gains.copy_within(hop.., 0);
                    let tracker = &mut self.trackers[m];
                    let band_rule = &rule.bands[m];
                    let (mut level, mut gain) = (self.slm.floor_db, band_rule.insertion_gain_db);
                    for (g, &x) in gains[hop..].iter_mut().zip(&self.band_blocks[m][hop..]) {
                        level = self.slm.level_db(m, tracker.step(x));
                        gain = band_rule.gain_db(level);
                        *g = libm::pow(10.0, gain / 20.0);
                    }
                    levels_db_spl.push(level);
                    gains_db.push(gain);
                }
                self.y.iter_mut().for_each(|v| *v = 0.0);
                for (block, gains) in self.band_blocks.iter().zip(&self.sample_gains) {
                    for ((y, b), g) in self.y.iter_mut().zip(block).zip(gains) {
                        *y += g * b;
                    }
                }
                GainRecord {
                    block: self.block,
                    levels_db_spl,
                    gains_db,
                }
            }
        };

        let w = &self.window;
        for (i, r) in output.iter_mut().enumerate() {
            *r = self.y_prev[hop + i] * w[hop + i] + self.y[i] * w[i];
        }
        core::mem::swap(&mut self.y_prev, &mut self.y);
        self.block += 1;
        self.trace.records.push(record.clone());
        Ok(record)
    }

    /// Completes the last half frame with the gains already applied to it. Equivalent to the
    /// overlap-add of the final frame with a continuation at unchanged gains.
    pub fn drain(&self) -> Vec<f64> {
        let hop = self.hop;
        (0..hop)
            .map(|i| {
                let v = self.y_prev[hop + i];
                v * self.window[hop + i] + v * self.window[i]
            })
            .collect()
    }

    /// Runs a whole signal through a fresh processor and returns output aligned to the
    /// band-signal clock: the half block of start-up padding is dropped and the final half
    /// block is drained, so the result has the input's length and the filter bank's
    /// `N/2`-sample group delay as its only latency. A short final block is zero padded.
    pub fn process_aligned(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        let hop = self.hop;
        let mut out = Vec::with_capacity(input.len() + 2 * hop);
        let mut block_in = vec![0.0; hop];
        let mut block_out = vec![0.0; hop];
        for chunk in input.chunks(hop) {
            block_in[..chunk.len()].copy_from_slice(chunk);
            block_in[chunk.len()..].iter_mut().for_each(|v| *v = 0.0);
            self.process_block(&block_in, &mut block_out)?;
            out.extend_from_slice(&block_out);
        }
        if input.is_empty() {
            return Ok(out);
        }
        out.extend(self.drain());
        out.drain(..hop);
        out.truncate(input.len());
        Ok(out)
    }
}
