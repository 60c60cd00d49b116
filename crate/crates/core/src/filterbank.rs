//! Log-banded brick-wall FIR filter bank.
//!
//! Band `m` is centred on `base_center_hz * 2^m`. Band edges sit half an octave above each
//! centre (the lowest band instead reaches one DFT bin above its centre), and the bands tile
//! the spectrum from `min_freq_hz` up. Each filter is specified as a 0/1 mask on an `N`-point
//! DFT grid with bin spacing `base_center_hz / 2`, inverse transformed to a zero-phase impulse
//! response and circularly shifted by `N/2` to make it causal and linear phase.
//!
//! Bin ownership on shared edges is half-open: band 0 owns `lo <= f <= hi`, every other band
//! owns `lo < f <= hi`. With that rule the masks sum to exactly one on every bin from the
//! lowest band edge up to the top edge, and DC belongs to no band.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBankSpec {
    pub sample_rate_hz: f64,
    pub num_bands: usize,
    pub base_center_hz: f64,
    pub min_freq_hz: f64,
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 24_000.0,
            num_bands: 6,
            base_center_hz: 250.0,
            min_freq_hz: 20.0,
        }
    }
}

impl FilterBankSpec {
    pub fn with_sample_rate(sample_rate_hz: f64) -> Self {
        Self {
            sample_rate_hz,
            ..Self::default()
        }
    }

    /// Checks every derived quantity: positive parameters, an even integral filter length
    /// and a top band edge at or below Nyquist.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sample_rate_hz) {
            return Err(Error::Spec(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.num_bands == 0 {
            return Err(Error::Spec("at least one band is required".into()));
        }
        if !positive(self.base_center_hz) || !positive(self.min_freq_hz) {
            return Err(Error::Spec(
                "base centre and minimum frequency must be positive".into(),
            ));
        }
        if self.min_freq_hz >= self.base_center_hz {
            return Err(Error::Spec(format!(
                "minimum frequency {} Hz must lie below the first centre {} Hz",
                self.min_freq_hz, self.base_center_hz
            )));
        }
        self.filter_length()?;
        let top = self.num_bands - 1;
        let (_, hi) = self.band_limits(top)?;
        let nyquist = self.nyquist_hz();
        if hi > nyquist * (1.0 + EDGE_EPS) {
            return Err(Error::Spec(format!(
                "band {top} top edge {hi} Hz > Nyquist {nyquist} Hz"
            )));
        }
        Ok(())
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    fn check_band(&self, m: usize) -> Result<()> {
        if m < self.num_bands {
            Ok(())
        } else {
            Err(Error::InvalidBand {
                index: m,
                bands: self.num_bands,
            })
        }
    }

    /// `base_center_hz * 2^m`.
    pub fn center_frequency(&self, m: usize) -> Result<f64> {
        self.check_band(m)?;
        Ok(self.base_center_hz * libm::ldexp(1.0, m as i32))
    }

    /// DFT bin spacing, half the first centre frequency.
    pub fn dft_resolution(&self) -> f64 {
        self.base_center_hz / 2.0
    }

    /// Filter length `N = f_s / f_t`. Must be an even integer so the overlap-add hop `N/2`
    /// is whole.
    pub fn filter_length(&self) -> Result<usize> {
        let ratio = self.sample_rate_hz / self.dft_resolution();
        let n = libm::round(ratio);
        if !ratio.is_finite() || n < 2.0 || libm::fabs(ratio - n) > EDGE_EPS * n {
            return Err(Error::Spec(format!(
                "filter length f_s/f_t = {ratio} is not an integer"
            )));
        }
        let n = n as usize;
        if !n.is_multiple_of(2) {
            return Err(Error::Spec(format!("filter length {n} is odd")));
        }
        Ok(n)
    }

    /// `(lo_hz, hi_hz)` of band `m`.
    pub fn band_limits(&self, m: usize) -> Result<(f64, f64)> {
        self.check_band(m)?;
        let hi = |m: usize| -> f64 {
            let fc = self.base_center_hz * libm::ldexp(1.0, m as i32);
            if m == 0 {
                fc + self.dft_resolution()
            } else {
                1.5 * fc
            }
        };
        let lo = if m == 0 { self.min_freq_hz } else { hi(m - 1) };
        Ok((lo, hi(m)))
    }

    pub fn band(&self, m: usize) -> Result<BandSpec> {
        let (lo_hz, hi_hz) = self.band_limits(m)?;
        Ok(BandSpec {
            index: m,
            center_hz: self.center_frequency(m)?,
            lo_hz,
            hi_hz,
        })
    }

    pub fn bands(&self) -> Result<Vec<BandSpec>> {
        (0..self.num_bands).map(|m| self.band(m)).collect()
    }

    /// Half-spectrum mask of band `m`: entry `k` (for `0 <= k <= N/2`) is 1.0 when bin `k`
    /// lies in the passband, else 0.0.
    pub fn band_mask(&self, m: usize) -> Result<Vec<f64>> {
        let n = self.filter_length()?;
        let (lo, hi) = self.band_limits(m)?;
        let ft = self.dft_resolution();
        let eps = EDGE_EPS * ft;
        Ok((0..=n / 2)
            .map(|k| {
                let f = k as f64 * ft;
                let above_lo = if m == 0 { f >= lo - eps } else { f > lo + eps };
                if k > 0 && above_lo && f <= hi + eps {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Designs the linear-phase brick-wall filter for band `m`.
    pub fn design_band_filter(&self, m: usize) -> Result<FirFilter> {
        self.validate()?;
        let n = self.filter_length()?;
        let mask = self.band_mask(m)?;
        let zero_phase = inverse_real_even_dft(&mask, n);
        let half = n / 2;
        let taps = (0..n).map(|i| zero_phase[(i + half) % n]).collect();
        Ok(FirFilter {
            taps,
            band: m,
            length: n,
            dft_resolution_hz: self.dft_resolution(),
            sample_rate_hz: self.sample_rate_hz,
        })
    }
}

/// Passband of one band on the continuous frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub index: usize,
    pub center_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Inverse DFT of a real, even spectrum given by its half `0..=n/2`. The result is real and
/// even (`h[i] == h[n - i]`), so only the first half is computed and the rest mirrored.
fn inverse_real_even_dft(half_spectrum: &[f64], n: usize) -> Vec<f64> {
    let half = n / 2;
    debug_assert_eq!(half_spectrum.len(), half + 1);
    let cos_table: Vec<f64> = (0..n)
        .map(|j| libm::cos(2.0 * PI * j as f64 / n as f64))
        .collect();
    let mut out = vec![0.0; n];
    for i in 0..=half {
        let mut acc = half_spectrum[0] + half_spectrum[half] * cos_table[(half * i) % n];
        for (k, &h) in half_spectrum.iter().enumerate().take(half).skip(1) {
            if h != 0.0 {
                acc += 2.0 * h * cos_table[(k * i) % n];
            }
        }
        out[i] = acc / n as f64;
    }
    for i in half + 1..n {
        out[i] = out[n - i];
    }
    out
}

/// One designed band filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub band: usize,
    pub length: usize,
    pub dft_resolution_hz: f64,
    pub sample_rate_hz: f64,
}

impl FirFilter {
    pub fn group_delay(&self) -> usize {
        self.length / 2
    }

    /// Magnitude of the DFT of the taps at bins `0..=N/2`.
    pub fn magnitude_response(&self) -> Vec<f64> {
        let n = self.length;
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &h) in self.taps.iter().enumerate() {
                    let phase = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                    re += h * libm::cos(phase);
                    im -= h * libm::sin(phase);
                }
                libm::hypot(re, im)
            })
            .collect()
    }

    /// Opens a streaming convolution against a signal sampled at `sample_rate_hz`.
    pub fn stream(&self, sample_rate_hz: f64) -> Result<FirStream> {
        if sample_rate_hz != self.sample_rate_hz {
            return Err(Error::SampleRate {
                expected: self.sample_rate_hz,
                got: sample_rate_hz,
            });
        }
        Ok(FirStream::new(self))
    }
}

/// Streaming linear convolution with `N - 1` samples of history.
#[derive(Debug, Clone)]
pub struct FirStream {
    reversed: Vec<f64>,
    buffer: Vec<f64>,
}

impl FirStream {
    fn new(filter: &FirFilter) -> Self {
        let mut reversed = filter.taps.clone();
        reversed.reverse();
        Self {
            buffer: vec![0.0; filter.length - 1],
            reversed,
        }
    }

    /// Filters `input` into `output`; both must have the same length.
    pub fn process(&mut self, input: &[f64], output: &mut [f64]) -> Result<()> {
        if input.len() != output.len() {
            return Err(Error::Shape(format!(
                "input has {} samples but output has {}",
                input.len(),
                output.len()
            )));
        }
        let hist = self.reversed.len() - 1;
        self.buffer.extend_from_slice(input);
        convolve_valid(&self.reversed, &self.buffer, output);
        self.buffer.drain(..input.len());
        debug_assert_eq!(self.buffer.len(), hist);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.buffer.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// `out[i] = sum_j reversed[j] * signal[i + j]`; `signal` must hold
/// `out.len() + reversed.len() - 1` samples.
pub(crate) fn convolve_valid(reversed: &[f64], signal: &[f64], out: &mut [f64]) {
    debug_assert_eq!(signal.len(), out.len() + reversed.len() - 1);
    for (i, y) in out.iter_mut().enumerate() {
        *y = dot(reversed, &signal[i..i + reversed.len()]);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A full designed bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub spec: FilterBankSpec,
    pub bands: Vec<BandSpec>,
    pub filters: Vec<FirFilter>,
}

impl FilterBank {
    pub fn design(spec: FilterBankSpec) -> Result<Self> {
        spec.validate()?;
        let bands = spec.bands()?;
        let filters = (0..spec.num_bands)
            .map(|m| spec.design_band_filter(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            bands,
            filters,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.filters.len()
    }

    pub fn filter_length(&self) -> usize {
        self.filters[0].length
    }
}
