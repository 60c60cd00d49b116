use alloc::format;
use alloc::vec::Vec;

use crate::slm::BandLevels;
use crate::{Error, Result};

/// Compression law for one band: linear gain below the knee, slope `1/CR` above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRule {
    pub insertion_gain_db: f64,
    pub knee_db_spl: f64,
    pub compression_ratio: f64,
}

impl BandRule {
    pub fn gain_db(&self, level_db_spl: f64) -> f64 {
        if level_db_spl <= self.knee_db_spl {
            self.insertion_gain_db
        } else {
            self.insertion_gain_db
                - (1.0 - 1.0 / self.compression_ratio) * (level_db_spl - self.knee_db_spl)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressorRule {
    pub bands: Vec<BandRule>,
}

impl CompressorRule {
    pub fn new(bands: Vec<BandRule>) -> Result<Self> {
        let rule = Self { bands };
        rule.validate()?;
        Ok(rule)
    }

    /// A mild sloping high-frequency prescription for six bands.
    pub fn default_six_band() -> Self {
        let gains = [10.0, 14.0, 18.0, 22.0, 25.0, 25.0];
        let ratios = [1.5, 1.8, 2.0, 2.2, 2.5, 2.5];
        Self {
            bands: gains
                .iter()
                .zip(ratios)
                .map(|(&g, cr)| BandRule {
                    insertion_gain_db: g,
                    knee_db_spl: 50.0,
                    compression_ratio: cr,
                })
                .collect(),
        }
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (m, b) in self.bands.iter().enumerate() {
            if !(b.compression_ratio >= 1.0) || !b.compression_ratio.is_finite() {
                return Err(Error::Spec(format!(
                    "band {m}: compression ratio {} must be >= 1",
                    b.compression_ratio
                )));
            }
            if !(0.0..=120.0).contains(&b.knee_db_spl) {
                return Err(Error::Spec(format!(
                    "band {m}: knee {} dB SPL outside [0, 120]",
                    b.knee_db_spl
                )));
            }
            if !b.insertion_gain_db.is_finite() {
                return Err(Error::Spec(format!(
                    "band {m}: insertion gain is not finite"
                )));
            }
        }
        Ok(())
    }

    /// Per-band gain in dB for the given levels.
    pub fn reference_gain(&self, levels: &BandLevels) -> Result<Vec<f64>> {
        if levels.len() != self.num_bands() {
            return Err(Error::Shape(format!(
                "rule has {} bands but {} levels were given",
                self.num_bands(),
                levels.len()
            )));
        }
        Ok(self
            .bands
            .iter()
            .zip(levels.as_slice())
            .map(|(b, &l)| b.gain_db(l))
            .collect())
    }
}
