//! Run configuration: one JSON document describing the filter bank, meter, engine, model,
//! trainer and paths. Every field has a default; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use nnhac_core::prescription::BandRule;
use nnhac_core::{
    CompressorRule, Estimator, FilterBankSpec, Mlp, SlmConfig, TrackerConfig, TrainerConfig,
};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    Neural,
    #[serde(alias = "compressor_baseline")]
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub filterbank: FilterBankSection,
    pub slm: SlmSection,
    pub engine: EngineKind,
    /// Neural-engine model file.
    pub model: Option<PathBuf>,
    /// Compressor rule, one entry per band. Defaults to the built-in six-band rule.
    pub rule: Option<Vec<RuleSection>>,
    pub tracker: TrackerSection,
    pub network: NetworkSection,
    pub trainer: TrainerSection,
    pub oracle: OracleSection,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            filterbank: FilterBankSection::default(),
            slm: SlmSection::default(),
            engine: EngineKind::default(),
            model: None,
            rule: None,
            tracker: TrackerSection::default(),
            network: NetworkSection::default(),
            trainer: TrainerSection::default(),
            oracle: OracleSection::default(),
            seed: 0,
            input: None,
            output: None,
            trace: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterBankSection {
    pub sample_rate_hz: f64,
    pub num_bands: usize,
    pub base_center_hz: f64,
    pub min_freq_hz: f64,
}

impl Default for FilterBankSection {
    fn default() -> Self {
        let s = FilterBankSpec::default();
        Self {
            sample_rate_hz: s.sample_rate_hz,
            num_bands: s.num_bands,
            base_center_hz: s.base_center_hz,
            min_freq_hz: s.min_freq_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Rms,
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlmSection {
    pub estimator: EstimatorKind,
    /// Per-band dB offsets; a single value applies to every band.
    pub calibration_db: Vec<f64>,
    pub dc_offset: Vec<f64>,
    pub floor_db: f64,
}

impl Default for SlmSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorKind::Rms,
            calibration_db: vec![SlmConfig::DEFAULT_CALIBRATION_DB],
            dc_offset: vec![0.0],
            floor_db: SlmConfig::DEFAULT_FLOOR_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    pub insertion_gain_db: f64,
    pub knee_db_spl: f64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerSection {
    pub attack_ms: f64,
    pub release_ms: f64,
}

impl Default for TrackerSection {
    fn default() -> Self {
        let t = TrackerConfig::default();
        Self {
            attack_ms: t.attack_ms,
            release_ms: t.release_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    /// Hidden layer widths; input and output widths follow the band count.
    pub hidden: Vec<usize>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { hidden: vec![8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerSection {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub anchor_weight: f64,
    /// Per-epoch loss CSV. `--trace` overrides it for `train` and `personalize`.
    pub loss_log: Option<PathBuf>,
}

impl Default for TrainerSection {
    fn default() -> Self {
        let t = TrainerConfig::default();
        Self {
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            epochs: t.epochs,
            batch_size: t.batch_size,
            anchor_weight: t.anchor_weight,
            loss_log: None,
        }
    }
}

/// Oracle grid used by `train` when no dataset is given: every band at the same level, from
/// `lo_db` to `hi_db` in `step_db` increments. Held-out checks use the midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub lo_db: f64,
    pub hi_db: f64,
    pub step_db: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            lo_db: 20.0,
            hi_db: 100.0,
            step_db: 5.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Checks everything that does not require opening data files.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.filterbank_spec().validate().map_err(config_err)?;
        self.slm_config()?;
        self.tracker_config();
        self.trainer_config().validate().map_err(config_err)?;
        if self.rule.is_some() || self.engine == EngineKind::Baseline {
            self.compressor_rule()?;
        }
        if self.network.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        let o = &self.oracle;
        if !(o.step_db > 0.0) || o.hi_db < o.lo_db {
            return Err(Error::Config(
                "oracle grid needs step_db > 0 and hi_db >= lo_db".into(),
            ));
        }
        Ok(())
    }

    pub fn num_bands(&self) -> usize {
        self.filterbank.num_bands
    }

    pub fn filterbank_spec(&self) -> FilterBankSpec {
        FilterBankSpec {
            sample_rate_hz: self.filterbank.sample_rate_hz,
            num_bands: self.filterbank.num_bands,
            base_center_hz: self.filterbank.base_center_hz,
            min_freq_hz: self.filterbank.min_freq_hz,
        }
    }

    pub fn slm_config(&self) -> Result<SlmConfig> {
        let m = self.num_bands();
        let expand = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
            match v.len() {
                1 => Ok(vec![v[0]; m]),
                n if n == m => Ok(v.to_vec()),
                n => Err(Error::Config(format!(
                    "slm.{name} has {n} entries; give one value or {m}"
                ))),
            }
        };
        let cfg = SlmConfig {
            dc_offset: expand("dc_offset", &self.slm.dc_offset)?,
            calibration_db: expand("calibration_db", &self.slm.calibration_db)?,
            estimator: match self.slm.estimator {
                EstimatorKind::Rms => Estimator::Rms,
                EstimatorKind::PaperLiteral => Estimator::PaperLiteral,
            },
            floor_db: self.slm.floor_db,
        };
        cfg.validate(m).map_err(config_err)?;
        Ok(cfg)
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            attack_ms: self.tracker.attack_ms,
            release_ms: self.tracker.release_ms,
        }
    }

    pub fn compressor_rule(&self) -> Result<CompressorRule> {
        let rule = match &self.rule {
            Some(bands) => CompressorRule {
                bands: bands
                    .iter()
                    .map(|b| BandRule {
                        insertion_gain_db: b.insertion_gain_db,
                        knee_db_spl: b.knee_db_spl,
                        compression_ratio: b.compression_ratio,
                    })
                    .collect(),
            },
            None if self.num_bands() == 6 => CompressorRule::default_six_band(),
            None => {
                return Err(Error::Config(format!(
                    "no default rule for {} bands; set `rule`",
                    self.num_bands()
                )))
            }
        };
        if rule.num_bands() != self.num_bands() {
            return Err(Error::Config(format!(
                "rule has {} bands, filter bank has {}",
                rule.num_bands(),
                self.num_bands()
            )));
        }
        rule.validate().map_err(config_err)?;
        Ok(rule)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let m = self.num_bands();
        let mut sizes = vec![m];
        sizes.extend(&self.network.hidden);
        sizes.push(m);
        sizes
    }

    pub fn initial_network(&self) -> Result<Mlp> {
        Ok(Mlp::new_random(&self.layer_sizes(), self.seed)?)
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig {
            learning_rate: self.trainer.learning_rate,
            momentum: self.trainer.momentum,
            epochs: self.trainer.epochs,
            batch_size: self.trainer.batch_size,
            seed: self.seed,
            anchor_weight: self.trainer.anchor_weight,
        }
    }
}

fn config_err(e: nnhac_core::Error) -> Error {
    Error::Config(e.to_string())
}
