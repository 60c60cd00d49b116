//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits non-zero
//! if any criterion fails or exceeds its runtime budget.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nnhac::audio::write_mono_f32;
use nnhac::commands::{cmd_process, cmd_train};
use nnhac::config::{EngineKind, RunConfig};
use nnhac_core::prescription::{
    loss_and_gradient, max_abs_error_db, personalize, train, CompressorRule, Mlp, TrainerConfig,
    TrainingSet,
};
use nnhac_core::{
    BandLevels, BlockProcessor, Engine, FilterBank, FilterBankSpec, SlmConfig, TrackerConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, Box<dyn Fn() -> Outcome>);

const FS: f64 = 24_000.0;
const N: usize = 192;
const H: usize = 96;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bank() -> FilterBank {
    FilterBank::design(FilterBankSpec::default()).expect("default bank")
}

fn processor(engine: Engine) -> BlockProcessor {
    BlockProcessor::new(bank(), SlmConfig::uniform(6, 100.0), engine).expect("processor")
}

fn zero_net() -> Engine {
    Engine::Neural(Mlp::zeros(&[6, 8, 6]).expect("zero net"))
}

fn tone(freq: f64, amp: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| amp * (2.0 * PI * freq * n as f64 / FS).sin())
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn oracle() -> (TrainingSet, TrainingSet) {
    let rule = CompressorRule::default_six_band();
    let grid = TrainingSet::level_grid(20.0, 100.0, 5.0);
    let mids: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    (
        TrainingSet::from_rule(&rule, grid).expect("grid"),
        TrainingSet::from_rule(&rule, mids).expect("midpoints"),
    )
}

fn trained_model() -> Mlp {
    let (grid, _) = oracle();
    let init = Mlp::new_random(&[6, 8, 6], 0).expect("init");
    train(&init, &grid, &TrainerConfig::default())
        .expect("train")
        .model
}

fn filterbank_constants() -> Outcome {
    let spec = FilterBankSpec::default();
    ensure(spec.sample_rate_hz == FS, || {
        "default rate is not 24 kHz".into()
    })?;
    let centers: Vec<f64> = (0..6).map(|m| spec.center_frequency(m).unwrap()).collect();
    ensure(
        centers == [250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0],
        || format!("centers {centers:?}"),
    )?;
    ensure(spec.dft_resolution() == 125.0, || {
        format!("resolution {}", spec.dft_resolution())
    })?;
    let n = spec.filter_length().map_err(|e| e.to_string())?;
    ensure(n == 192, || format!("N = {n}"))?;
    ensure(n as f64 * 1000.0 / FS == 8.0, || {
        "filter is not 8 ms long".into()
    })?;
    let edges: Vec<(f64, f64)> = spec
        .bands()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|b| (b.lo_hz, b.hi_hz))
        .collect();
    let expected = [
        (20.0, 375.0),
        (375.0, 750.0),
        (750.0, 1500.0),
        (1500.0, 3000.0),
        (3000.0, 6000.0),
        (6000.0, 12000.0),
    ];
    ensure(edges == expected, || format!("edges {edges:?}"))?;
    Ok("f_c 250..8000 Hz, f_t 125 Hz, N 192 (8 ms), edges exact".into())
}

fn linear_phase() -> Outcome {
    let bank = bank();
    let mut worst = 0.0f64;
    for f in &bank.filters {
        ensure(f.taps.len() == N, || {
            format!("band {} has {} taps", f.band, f.taps.len())
        })?;
        for k in 1..N / 2 {
            worst = worst.max((f.taps[N / 2 + k] - f.taps[N / 2 - k]).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("asymmetry {worst:e}"))?;
    Ok(format!("max tap asymmetry {worst:.1e}"))
}

fn partition_of_unity() -> Outcome {
    let spec = FilterBankSpec::default();
    let masks: Vec<Vec<f64>> = (0..6).map(|m| spec.band_mask(m).unwrap()).collect();
    for k in 1..=N / 2 {
        let ones = masks.iter().filter(|mask| mask[k] == 1.0).count();
        let sum: f64 = masks.iter().map(|mask| mask[k]).sum();
        ensure(ones == 1 && sum == 1.0, || {
            format!("bin {k}: {ones} bands at 1, sum {sum}")
        })?;
    }
    Ok("bins 1..96 each covered by exactly one band".into())
}

fn reconstruction() -> Outcome {
    let len = 24_000;
    let input: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 / FS;
            [250.0, 1000.0, 4000.0]
                .iter()
                .map(|f| 0.1 * (2.0 * PI * f * t).sin())
                .sum()
        })
        .collect();
    let out = processor(zero_net())
        .process_aligned(&input)
        .map_err(|e| e.to_string())?;
    ensure(out.len() == input.len(), || "length changed".into())?;
    let (mut err, mut energy) = (0.0, 0.0);
    for n in 2 * N..len {
        err += (out[n] - input[n - H]).powi(2);
        energy += input[n - H].powi(2);
    }
    let rel = (err / energy).sqrt();
    ensure(rel < 1e-4, || format!("relative RMS error {rel:e}"))?;
    Ok(format!("relative RMS error {rel:.2e}"))
}

fn latency() -> Outcome {
    let mut input = vec![0.0; H * 20];
    input[0] = 1.0;
    let out = processor(zero_net())
        .process_aligned(&input)
        .map_err(|e| e.to_string())?;
    let peak = out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(usize::MAX);
    let ms = peak as f64 * 1000.0 / FS;
    ensure(peak == 96 && ms == 4.0, || {
        format!("peak at {peak} samples")
    })?;
    Ok(format!("impulse peak at {peak} samples = {ms} ms"))
}

fn block_linearity() -> Outcome {
    let len = 24_000;
    let input: Vec<f64> = tone(500.0, 0.3, len)
        .iter()
        .zip(tone(3000.0, 0.2, len))
        .map(|(a, b)| a + b)
        .collect();
    let net = Mlp::new_random(&[6, 8, 6], 5).map_err(|e| e.to_string())?;
    let run_frozen = |x: &[f64]| {
        let mut p = processor(Engine::Neural(net.clone()));
        p.set_level_override(Some(BandLevels::uniform(6, 65.0)))
            .unwrap();
        p.process_aligned(x).unwrap()
    };
    let half: Vec<f64> = input.iter().map(|v| 0.5 * v).collect();
    let full_out = run_frozen(&input);
    let half_out = run_frozen(&half);
    let worst = full_out
        .iter()
        .zip(&half_out)
        .fold(0.0f64, |m, (a, b)| m.max((0.5 * a - b).abs()));
    ensure(worst < 1e-12, || format!("neural deviation {worst:e}"))?;

    let loud = tone(2000.0, 0.5, len);
    let quiet: Vec<f64> = loud.iter().map(|v| 0.5 * v).collect();
    let steady = |x: &[f64]| {
        let out = processor(Engine::Compressor {
            rule: CompressorRule::default_six_band(),
            tracker: TrackerConfig::default(),
        })
        .process_aligned(x)
        .unwrap();
        rms(&out[out.len() - 4800..])
    };
    let scale = steady(&quiet) / steady(&loud);
    ensure(scale > 0.5 + 1e-3, || format!("baseline scale {scale}"))?;
    Ok(format!(
        "neural |0.5 y - y(0.5 x)| <= {worst:.1e}; baseline scale {scale:.4}"
    ))
}

fn slm_calibration() -> Outcome {
    // 1 kHz sits on bin 8 and inside band 2
    let measure = |amp: f64| {
        let mut p = processor(zero_net());
        p.process_aligned(&tone(1000.0, amp, H * 20)).unwrap();
        p.trace().records[10].levels_db_spl[2]
    };
    let full = measure(1.0);
    let louder = measure(10.0);
    ensure((full - 96.99).abs() <= 0.05, || {
        format!("full scale reads {full}")
    })?;
    let shift = louder - full;
    ensure((shift - 20.0).abs() <= 0.01, || {
        format!("+20 dB reads {shift}")
    })?;
    Ok(format!(
        "full scale {full:.3} dB SPL, +20 dB shift {shift:.4} dB"
    ))
}

fn gradient_check() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for seed in [11u64, 22, 33] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlp = Mlp::new_random(&[6, 8, 6], seed).map_err(|e| e.to_string())?;
        let inputs: Vec<BandLevels> = (0..5)
            .map(|_| BandLevels::new((0..6).map(|_| rng.gen_range(20.0..100.0)).collect()))
            .collect();
        let targets: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..6).map(|_| rng.gen_range(-5.0..30.0)).collect())
            .collect();
        let theta = mlp.params();
        let loss_at = |p: &[f64]| {
            let mut m = mlp.clone();
            m.set_params(p).unwrap();
            loss_and_gradient(&m, &inputs, &targets, None).unwrap().0
        };
        let (_, grad) =
            loss_and_gradient(&mlp, &inputs, &targets, None).map_err(|e| e.to_string())?;
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-4, || format!("relative error {worst:e}"))?;
    Ok(format!(
        "3 seeds x 118 parameters, max relative error {worst:.1e}"
    ))
}

fn interpolation() -> Outcome {
    let (grid, mids) = oracle();
    let model = trained_model();
    let train_err = max_abs_error_db(&model, &grid).map_err(|e| e.to_string())?;
    let held = max_abs_error_db(&model, &mids).map_err(|e| e.to_string())?;
    ensure(held < 1.0, || format!("held-out max error {held} dB"))?;
    Ok(format!(
        "grid max error {train_err:.3} dB, held-out max error {held:.3} dB"
    ))
}

fn widening() -> Outcome {
    let base = trained_model();
    let wide = base.widen(1, 4, 99).map_err(|e| e.to_string())?;
    ensure(wide.layer_sizes() == [6, 12, 6], || {
        format!("widened sizes {:?}", wide.layer_sizes())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..120.0)).collect();
        let a = base.forward(&x).map_err(|e| e.to_string())?;
        let b = wide.forward(&x).map_err(|e| e.to_string())?;
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs());
        }
    }
    ensure(worst < 1e-9, || format!("max output change {worst:e}"))?;
    Ok(format!("1000 probes, max output change {worst:.1e} dB"))
}

fn personalization() -> Outcome {
    let anchor = trained_model();
    let x = BandLevels::uniform(6, 65.0);
    let before = anchor.prescribe(&x).map_err(|e| e.to_string())?;
    let mut target = before.clone();
    target[3] += 6.0;
    let prefs = TrainingSet::new(vec![x.clone()], vec![target]).map_err(|e| e.to_string())?;
    let small = TrainerConfig {
        epochs: 300,
        anchor_weight: 1e-4,
        ..TrainerConfig::default()
    };
    let after = personalize(&anchor, &prefs, &small)
        .map_err(|e| e.to_string())?
        .model
        .prescribe(&x)
        .map_err(|e| e.to_string())?;
    let moved = after[3] - before[3];
    ensure(moved >= 3.0, || format!("band 3 moved {moved} dB"))?;
    let others = [0, 1, 2, 4, 5]
        .iter()
        .map(|&m| (after[m] - before[m]).abs())
        .fold(0.0f64, f64::max);
    ensure(others < 2.0, || {
        format!("other bands moved up to {others} dB")
    })?;

    let stiff = TrainerConfig {
        anchor_weight: 1e6,
        ..small
    };
    let pinned = personalize(&anchor, &prefs, &stiff)
        .map_err(|e| e.to_string())?
        .model;
    let drift = pinned
        .params()
        .iter()
        .zip(anchor.params())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure(drift < 1e-6, || format!("parameters drifted {drift:e}"))?;
    Ok(format!(
        "band 3 +{moved:.2} dB, others <= {others:.2} dB; stiff anchor drift {drift:.1e}"
    ))
}

fn speech_shaped_noise(seconds: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * FS) as usize;
    let mut state = 0.0;
    // one-pole low-pass tilts white noise towards a speech-like spectrum
    (0..len)
        .map(|_| {
            state = 0.9 * state + 0.1 * rng.gen_range(-1.0..1.0);
            state
        })
        .collect()
}

fn determinism_and_speed(dir: &Path) -> Outcome {
    let wav = dir.join("noise.wav");
    write_mono_f32(&wav, FS as u32, &speech_shaped_noise(10.0, 3)).map_err(|e| e.to_string())?;

    let mut train_cfg = RunConfig {
        seed: 7,
        ..RunConfig::default()
    };
    train_cfg.trainer.epochs = 500;
    let mut models = Vec::new();
    for run in 0..2 {
        train_cfg.output = Some(dir.join(format!("model{run}.json")));
        cmd_train(&train_cfg).map_err(|e| e.to_string())?;
        models.push(fs::read(train_cfg.output.as_ref().unwrap()).map_err(|e| e.to_string())?);
    }
    ensure(models[0] == models[1], || "model files differ".into())?;

    let mut cfg = RunConfig {
        engine: EngineKind::Neural,
        model: Some(dir.join("model0.json")),
        input: Some(wav),
        ..RunConfig::default()
    };
    let mut outputs = Vec::new();
    let mut worst_rtf = f64::INFINITY;
    for run in 0..2 {
        cfg.output = Some(dir.join(format!("out{run}.wav")));
        cfg.trace = Some(dir.join(format!("trace{run}.csv")));
        let start = Instant::now();
        let summary = cmd_process(&cfg).map_err(|e| e.to_string())?;
        let wall = start.elapsed().as_secs_f64();
        ensure(wall < 1.0, || {
            format!("10 s of audio took {wall:.3} s end to end")
        })?;
        ensure(summary.samples == 240_000, || {
            format!("{} output samples", summary.samples)
        })?;
        ensure(summary.blocks == 2500, || {
            format!("{} trace records", summary.blocks)
        })?;
        worst_rtf = worst_rtf.min(summary.real_time_factor);
        outputs.push((
            fs::read(cfg.output.as_ref().unwrap()).map_err(|e| e.to_string())?,
            fs::read(cfg.trace.as_ref().unwrap()).map_err(|e| e.to_string())?,
        ));
    }
    ensure(outputs[0].0 == outputs[1].0, || "output WAVs differ".into())?;
    ensure(outputs[0].1 == outputs[1].1, || "traces differ".into())?;
    ensure(worst_rtf > 10.0, || {
        format!("real-time factor {worst_rtf:.1}")
    })?;
    Ok(format!(
        "model, WAV and trace byte-identical; real-time factor {worst_rtf:.0}"
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let dir_path = dir.path().to_path_buf();
    let criteria: Vec<Criterion> = vec![
        ("filter-bank constants", 1, Box::new(filterbank_constants)),
        ("linear phase", 1, Box::new(linear_phase)),
        ("partition of unity", 1, Box::new(partition_of_unity)),
        ("reconstruction", 5, Box::new(reconstruction)),
        ("latency", 5, Box::new(latency)),
        ("block linearity contrast", 10, Box::new(block_linearity)),
        ("level meter calibration", 5, Box::new(slm_calibration)),
        ("gradient check", 10, Box::new(gradient_check)),
        ("interpolation", 60, Box::new(interpolation)),
        ("function-preserving widening", 5, Box::new(widening)),
        ("personalization", 60, Box::new(personalization)),
        (
            "determinism and performance",
            30,
            Box::new(move || determinism_and_speed(&dir_path)),
        ),
    ];

    let mut failures = 0;
    for (i, (name, budget_s, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed >= Duration::from_secs(*budget_s) => Err(format!(
                "{detail}; runtime {:.2} s over {budget_s} s budget",
                elapsed.as_secs_f64()
            )),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] {:>2}. {name}: {detail} ({:.2} s)",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
