//! Per-band block sound level meter.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// How a band block is reduced to a linear amplitude before taking the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Root mean square of the block.
    #[default]
    Rms,
    /// Plain sum of the block samples. Sign-indefinite for zero-mean band signals; kept for
    /// experiments that need the literal sum-then-log meter.
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlmConfig {
    /// Linear offset added before the logarithm, per band.
    pub dc_offset: Vec<f64>,
    /// dB offset mapping digital full scale to dB SPL, per band.
    pub calibration_db: Vec<f64>,
    pub estimator: Estimator,
    pub floor_db: f64,
}

impl SlmConfig {
    pub const DEFAULT_FLOOR_DB: f64 = -120.0;
    pub const DEFAULT_CALIBRATION_DB: f64 = 100.0;

    /// RMS meter with zero offsets and the same calibration in every band.
    pub fn uniform(num_bands: usize, calibration_db: f64) -> Self {
        Self {
            dc_offset: vec![0.0; num_bands],
            calibration_db: vec![calibration_db; num_bands],
            estimator: Estimator::Rms,
            floor_db: Self::DEFAULT_FLOOR_DB,
        }
    }

    pub fn num_bands(&self) -> usize {
        self.calibration_db.len()
    }

    pub fn validate(&self, num_bands: usize) -> Result<()> {
        if self.dc_offset.len() != num_bands || self.calibration_db.len() != num_bands {
            return Err(Error::Shape(format!(
                "level meter expects {num_bands} offsets and calibrations, got {} and {}",
                self.dc_offset.len(),
                self.calibration_db.len()
            )));
        }
        let finite = self
            .dc_offset
            .iter()
            .chain(&self.calibration_db)
            .chain(core::iter::once(&self.floor_db))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Shape("level meter settings must be finite".into()));
        }
        Ok(())
    }

    /// Converts a linear amplitude for band `m` to dB SPL, clamping at the floor.
    pub fn level_db(&self, m: usize, amplitude: f64) -> f64 {
        let arg = amplitude + self.dc_offset[m];
        if !(arg > 0.0) {
            return self.floor_db;
        }
        let level = 20.0 * libm::log10(arg) + self.calibration_db[m];
        if level.is_finite() {
            level.max(self.floor_db)
        } else if level > 0.0 {
            f64::MAX
        } else {
            self.floor_db
        }
    }

    /// Measures one block per band. Every block must have `block_len` samples.
    pub fn measure<B: AsRef<[f64]>>(
        &self,
        band_blocks: &[B],
        block_len: usize,
    ) -> Result<BandLevels> {
        if band_blocks.len() != self.num_bands() {
            return Err(Error::Shape(format!(
                "expected {} band blocks, got {}",
                self.num_bands(),
                band_blocks.len()
            )));
        }
        let levels = band_blocks
            .iter()
            .enumerate()
            .map(|(m, block)| {
                let block = block.as_ref();
                if block.len() != block_len {
                    return Err(Error::Shape(format!(
                        "band {m} block has {} samples, expected {block_len}",
                        block.len()
                    )));
                }
                let amplitude = match self.estimator {
                    Estimator::Rms => rms(block),
                    Estimator::PaperLiteral => block.iter().sum(),
                };
                Ok(self.level_db(m, amplitude))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BandLevels::new(levels))
    }
}

pub(crate) fn rms(block: &[f64]) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    let mean_sq = block.iter().map(|x| x * x).sum::<f64>() / block.len() as f64;
    libm::sqrt(mean_sq)
}

/// Per-band level in dB SPL.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLevels(pub Vec<f64>);

impl BandLevels {
    pub fn new(levels_db_spl: Vec<f64>) -> Self {
        Self(levels_db_spl)
    }

    /// Same level in every band.
    pub fn uniform(num_bands: usize, level_db_spl: f64) -> Self {
        Self(vec![level_db_spl; num_bands])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for BandLevels {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    const N: usize = 192;

    fn sine(bin: usize, amp: f64) -> Vec<f64> {
        (0..N)
            .map(|n| amp * libm::sin(2.0 * PI * (bin * n) as f64 / N as f64))
            .collect()
    }

    #[test]
    fn full_scale_sine_reads_rms_level() {
        let cfg = SlmConfig::uniform(1, 100.0);
        let lv = cfg.measure(&[sine(8, 1.0)], N).unwrap();
        // 20 log10(1/sqrt 2) + 100
        assert!((lv.0[0] - 96.989_700_043_360_19).abs() < 1e-9);
    }

    #[test]
    fn silence_is_floored() {
        for estimator in [Estimator::Rms, Estimator::PaperLiteral] {
            let cfg = SlmConfig {
                estimator,
                ..SlmConfig::uniform(2, 100.0)
            };
            let lv = cfg.measure(&[vec![0.0; N], vec![0.0; N]], N).unwrap();
            assert_eq!(lv.0, vec![-120.0, -120.0]);
        }
    }

    #[test]
    fn literal_mode_with_unit_offset() {
        let cfg = SlmConfig {
            dc_offset: vec![1.0],
            calibration_db: vec![0.0],
            estimator: Estimator::PaperLiteral,
            floor_db: -120.0,
        };
        let lv = cfg.measure(&[vec![0.0; N]], N).unwrap();
        assert_eq!(lv.0, vec![0.0]);
    }

    #[test]
    fn literal_mode_negative_sum_floors() {
        let cfg = SlmConfig {
            estimator: Estimator::PaperLiteral,
            ..SlmConfig::uniform(1, 100.0)
        };
        let lv = cfg.measure(&[vec![-0.5; N]], N).unwrap();
        assert_eq!(lv.0, vec![-120.0]);
    }

    #[test]
    fn wrong_block_length_is_shape_error() {
        let cfg = SlmConfig::uniform(1, 100.0);
        assert!(matches!(
            cfg.measure(&[vec![0.0; N - 1]], N),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            cfg.measure(&[vec![0.0; N], vec![0.0; N]], N),
            Err(Error::Shape(_))
        ));
    }

    proptest! {
        #[test]
        fn tenfold_scaling_adds_twenty_db(samples in prop::collection::vec(-1.0f64..1.0, N)) {
            let cfg = SlmConfig::uniform(1, 94.0);
            let base = cfg.measure(core::slice::from_ref(&samples), N).unwrap().0[0];
            prop_assume!(base > cfg.floor_db + 40.0);
            let scaled: Vec<f64> = samples.iter().map(|x| 10.0 * x).collect();
            let louder = cfg.measure(&[scaled], N).unwrap().0[0];
            prop_assert!((louder - base - 20.0).abs() < 1e-9);
        }

        #[test]
        fn scaling_up_increases_level(
            samples in prop::collection::vec(-1.0f64..1.0, N),
            alpha in 1.01f64..50.0,
        ) {
            let cfg = SlmConfig::uniform(1, 100.0);
            let base = cfg.measure(core::slice::from_ref(&samples), N).unwrap().0[0];
            prop_assume!(base > cfg.floor_db);
            let scaled: Vec<f64> = samples.iter().map(|x| alpha * x).collect();
            prop_assert!(cfg.measure(&[scaled], N).unwrap().0[0] > base);
        }

        #[test]
        fn calibration_shifts_level(
            samples in prop::collection::vec(-1.0f64..1.0, N),
            delta in -50.0f64..50.0,
        ) {
            let cfg = SlmConfig::uniform(1, 100.0);
            let base = cfg.measure(core::slice::from_ref(&samples), N).unwrap().0[0];
            prop_assume!(base > cfg.floor_db + 60.0);
            let shifted = SlmConfig::uniform(1, 100.0 + delta);
            let lv = shifted.measure(&[samples], N).unwrap().0[0];
            prop_assert!((lv - base - delta).abs() < 1e-9);
        }

        #[test]
        fn never_nan(
            samples in prop::collection::vec(-1e300f64..1e300, N),
            literal in any::<bool>(),
        ) {
            let cfg = SlmConfig {
                estimator: if literal { Estimator::PaperLiteral } else { Estimator::Rms },
                ..SlmConfig::uniform(1, 100.0)
            };
            let lv = cfg.measure(&[samples], N).unwrap().0[0];
            prop_assert!(lv.is_finite());
            prop_assert!(lv >= cfg.floor_db);
        }
    }
}
