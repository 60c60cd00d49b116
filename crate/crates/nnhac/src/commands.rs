//! The four subcommands. Each validates its whole configuration and loads every input before
//! writing anything, and returns a report the binary prints as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use nnhac_core::prescription::{max_abs_error_db, personalize, train};
use nnhac_core::{BlockProcessor, Engine, FilterBank, TrainingSet};
use serde::Serialize;

use crate::config::{EngineKind, RunConfig};
use crate::dataset::read_dataset;
use crate::model_file::{load_model, save_model};
use crate::process::{process_file, Summary};
use crate::trace::{write_loss_log, write_response, write_taps};
use crate::{Error, Result};

/// Command-line values that replace the matching config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub seed: Option<u64>,
    pub engine: Option<EngineKind>,
}

/// Loads the config (or defaults), applies overrides and validates.
pub fn resolve_config(path: Option<&Path>, overrides: Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if overrides.input.is_some() {
        cfg.input = overrides.input;
    }
    if overrides.output.is_some() {
        cfg.output = overrides.output;
    }
    if overrides.trace.is_some() {
        cfg.trace = overrides.trace;
    }
    if overrides.model.is_some() {
        cfg.model = overrides.model;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(engine) = overrides.engine {
        cfg.engine = engine;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing {what}")))
}

#[derive(Debug, Serialize)]
pub struct BandRow {
    pub band: usize,
    pub center_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

#[derive(Debug, Serialize)]
pub struct DesignReport {
    pub sample_rate_hz: f64,
    pub filter_length: usize,
    pub dft_resolution_hz: f64,
    pub group_delay_samples: usize,
    pub bands: Vec<BandRow>,
    pub taps_csv: PathBuf,
    pub response_csv: PathBuf,
}

/// Writes `taps.csv` and `response.csv` into the output directory.
pub fn cmd_design_filters(cfg: &RunConfig) -> Result<DesignReport> {
    let out_dir = required(&cfg.output, "output directory (--output)")?;
    let bank =
        FilterBank::design(cfg.filterbank_spec()).map_err(|e| Error::Config(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let taps_csv = out_dir.join("taps.csv");
    let response_csv = out_dir.join("response.csv");
    write_taps(&taps_csv, &bank)?;
    write_response(&response_csv, &bank)?;
    let spec = bank.spec;
    Ok(DesignReport {
        sample_rate_hz: spec.sample_rate_hz,
        filter_length: bank.filter_length(),
        dft_resolution_hz: spec.dft_resolution(),
        group_delay_samples: bank.filter_length() / 2,
        bands: bank
            .bands
            .iter()
            .map(|b| BandRow {
                band: b.index,
                center_hz: b.center_hz,
                lo_hz: b.lo_hz,
                hi_hz: b.hi_hz,
            })
            .collect(),
        taps_csv,
        response_csv,
    })
}

/// Builds the block processor described by `cfg`, loading the model for the neural engine.
pub fn build_processor(cfg: &RunConfig) -> Result<BlockProcessor> {
    let bank =
        FilterBank::design(cfg.filterbank_spec()).map_err(|e| Error::Config(e.to_string()))?;
    let engine = match cfg.engine {
        EngineKind::Neural => {
            let path = required(&cfg.model, "model file (--model) for the neural engine")?;
            Engine::Neural(load_model(path)?)
        }
        EngineKind::Baseline => Engine::Compressor {
            rule: cfg.compressor_rule()?,
            tracker: cfg.tracker_config(),
        },
    };
    Ok(BlockProcessor::new(bank, cfg.slm_config()?, engine)?)
}

pub fn cmd_process(cfg: &RunConfig) -> Result<Summary> {
    let input = required(&cfg.input, "input WAV (--input)")?;
    let output = required(&cfg.output, "output WAV (--output)")?;
    let processor = build_processor(cfg)?;
    process_file(processor, input, output, cfg.trace.as_deref())
}

#[derive(Debug, Serialize)]
pub struct TrainReport {
    pub samples: usize,
    pub epochs: usize,
    pub parameters: usize,
    pub final_loss: Option<f64>,
    pub train_max_error_db: f64,
    pub held_out_max_error_db: Option<f64>,
    pub model: PathBuf,
    pub loss_log: Option<PathBuf>,
}

/// Trains from a dataset CSV (`input`) or, without one, from the compressor-rule oracle grid.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    let model_out = required(&cfg.output, "model output path (--output)")?;
    let loss_log = cfg.trace.clone().or_else(|| cfg.trainer.loss_log.clone());
    let bands = cfg.num_bands();

    let (data, held_out) = match &cfg.input {
        Some(path) => (read_dataset(path, bands)?, None),
        None => {
            let rule = cfg.compressor_rule()?;
            let o = &cfg.oracle;
            let grid = TrainingSet::level_grid(o.lo_db, o.hi_db, o.step_db);
            let mids = grid.windows(2).map(|w| 0.5 * (w[0] + w[1]));
            (
                TrainingSet::from_rule(&rule, grid.iter().copied())?,
                Some(TrainingSet::from_rule(&rule, mids)?),
            )
        }
    };
    if data.is_empty() {
        return Err(Error::data(
            cfg.input.clone().unwrap_or_default(),
            "training set is empty",
        ));
    }
    let init = match &cfg.model {
        Some(path) => load_model(path)?,
        None => cfg.initial_network()?,
    };
    let outcome = train(&init, &data, &cfg.trainer_config())?;
    let train_err = max_abs_error_db(&outcome.model, &data)?;
    let held_err = held_out
        .as_ref()
        .filter(|h| !h.is_empty())
        .map(|h| max_abs_error_db(&outcome.model, h))
        .transpose()?;

    save_model(&outcome.model, model_out)?;
    if let Some(path) = &loss_log {
        write_loss_log(path, &outcome.loss_history)?;
    }
    Ok(TrainReport {
        samples: data.len(),
        epochs: outcome.loss_history.len(),
        parameters: outcome.model.num_params(),
        final_loss: outcome.loss_history.last().copied(),
        train_max_error_db: train_err,
        held_out_max_error_db: held_err,
        model: model_out.to_path_buf(),
        loss_log,
    })
}

#[derive(Debug, Serialize)]
pub struct PreferenceRow {
    pub levels_db_spl: Vec<f64>,
    pub target_db: Vec<f64>,
    pub before_db: Vec<f64>,
    pub after_db: Vec<f64>,
    pub delta_db: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct PersonalizeReport {
    pub anchor_weight: f64,
    pub max_parameter_change: f64,
    pub preferences: Vec<PreferenceRow>,
    pub model: PathBuf,
}

/// Fine-tunes the model in `model` towards the preference CSV in `input`.
pub fn cmd_personalize(cfg: &RunConfig) -> Result<PersonalizeReport> {
    let model_in = required(&cfg.model, "anchor model (--model)")?;
    let prefs_path = required(&cfg.input, "preference CSV (--input)")?;
    let model_out = required(&cfg.output, "model output path (--output)")?;
    let loss_log = cfg.trace.clone().or_else(|| cfg.trainer.loss_log.clone());
    if !(cfg.trainer.anchor_weight > 0.0) {
        return Err(Error::Config(
            "personalization needs trainer.anchor_weight > 0".into(),
        ));
    }

    let anchor = load_model(model_in)?;
    let prefs = read_dataset(prefs_path, anchor.input_dim())?;
    if prefs.is_empty() {
        return Err(Error::data(prefs_path, "empty preference set"));
    }
    let outcome = personalize(&anchor, &prefs, &cfg.trainer_config())?;

    let mut rows = Vec::with_capacity(prefs.len());
    for (x, t) in prefs.inputs.iter().zip(&prefs.targets) {
        let before = anchor.prescribe(x)?;
        let after = outcome.model.prescribe(x)?;
        rows.push(PreferenceRow {
            levels_db_spl: x.0.clone(),
            target_db: t.clone(),
            delta_db: after.iter().zip(&before).map(|(a, b)| a - b).collect(),
            before_db: before,
            after_db: after,
        });
    }
    let max_change = outcome
        .model
        .params()
        .iter()
        .zip(anchor.params())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    save_model(&outcome.model, model_out)?;
    if let Some(path) = &loss_log {
        write_loss_log(path, &outcome.loss_history)?;
    }
    Ok(PersonalizeReport {
        anchor_weight: cfg.trainer.anchor_weight,
        max_parameter_change: max_change,
        preferences: rows,
        model: model_out.to_path_buf(),
    })
}
