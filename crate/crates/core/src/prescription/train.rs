use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::Mlp;
use super::rule::CompressorRule;
use crate::slm::BandLevels;
use crate::{Error, Result};

/// Paired level inputs and gain targets (dB).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<BandLevels>,
    pub targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<BandLevels>, targets: Vec<Vec<f64>>) -> Result<Self> {
        let set = Self { inputs, targets };
        set.check_shape()?;
        Ok(set)
    }

    /// Oracle samples with every band at the same level, one per entry of `levels_db`.
    pub fn from_rule(
        rule: &CompressorRule,
        levels_db: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let m = rule.num_bands();
        let mut set = Self::default();
        for level in levels_db {
            let input = BandLevels::uniform(m, level);
            set.targets.push(rule.reference_gain(&input)?);
            set.inputs.push(input);
        }
        Ok(set)
    }

    /// Levels `lo, lo + step, ..., hi` (inclusive within rounding).
    pub fn level_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        if !(step > 0.0) || hi < lo {
            return Vec::new();
        }
        let count = libm::floor((hi - lo) / step + 1e-9) as usize + 1;
        (0..count).map(|i| lo + step * i as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn check_shape(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(Error::Training(format!(
                "{} inputs but {} targets",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        let finite = self
            .inputs
            .iter()
            .flat_map(|l| l.as_slice())
            .chain(self.targets.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Training("training data must be finite".into()));
        }
        Ok(())
    }

    /// Checks lengths against a network with `bands` inputs and outputs.
    pub fn validate(&self, bands: usize) -> Result<()> {
        self.check_shape()?;
        for (i, (x, t)) in self.inputs.iter().zip(&self.targets).enumerate() {
            if x.len() != bands || t.len() != bands {
                return Err(Error::Shape(format!(
                    "sample {i}: expected {bands} levels and gains, got {} and {}",
                    x.len(),
                    t.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Weight of the `‖θ - θ_anchor‖²` penalty; only used by [`personalize`].
    pub anchor_weight: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            momentum: 0.9,
            epochs: 10_000,
            batch_size: 32,
            seed: 0,
            anchor_weight: 1e-4,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Training(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Training(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Training("batch size must be positive".into()));
        }
        if !(self.anchor_weight >= 0.0) || !self.anchor_weight.is_finite() {
            return Err(Error::Training(format!(
                "anchor weight must be non-negative, got {}",
                self.anchor_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Mlp,
    /// Full-set loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Loss and its exact gradient with respect to [`Mlp::params`].
///
/// The data term is the mean over samples and bands of the squared gain error measured in
/// network output units (dB error divided by the output scale). With an anchor the penalty
/// `weight * ‖θ - θ_anchor‖²` is added.
pub fn loss_and_gradient(
    mlp: &Mlp,
    inputs: &[BandLevels],
    targets: &[Vec<f64>],
    anchor: Option<(&[f64], f64)>,
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() {
        return Err(Error::Training("empty batch".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Training(
            "batch inputs and targets differ in length".into(),
        ));
    }
    let bands = mlp.output_dim();
    let scale = 1.0 / (inputs.len() * bands) as f64;
    let mut grad = vec![0.0; mlp.num_params()];
    let mut loss = 0.0;

    // parameter offset of each layer in the flat vector
    let mut offsets = Vec::with_capacity(mlp.layers.len());
    let mut acc = 0;
    for layer in &mlp.layers {
        offsets.push(acc);
        acc += layer.num_params();
    }

    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != mlp.input_dim() || t.len() != bands {
            return Err(Error::Shape(format!(
                "expected {} levels and {bands} gains, got {} and {}",
                mlp.input_dim(),
                x.len(),
                t.len()
            )));
        }
        let acts = mlp.activations(x.as_slice());
        let out = &acts[acts.len() - 1];
        let out_act = mlp.output_activation;
        let mut delta: Vec<f64> = out
            .iter()
            .zip(t)
            .map(|(&y, &target)| {
                let err = y - mlp.output_norm.to_net(target);
                loss += err * err * scale;
                2.0 * err * scale * out_act.derivative_from_output(y)
            })
            .collect();

        for l in (0..mlp.layers.len()).rev() {
            let layer = &mlp.layers[l];
            let a_in = &acts[l];
            let g = &mut grad[offsets[l]..offsets[l] + layer.num_params()];
            let (gw, gb) = g.split_at_mut(layer.weights.len());
            for (r, &d) in delta.iter().enumerate() {
                gb[r] += d;
                for (c, &a) in a_in.iter().enumerate() {
                    gw[r * layer.inputs + c] += d * a;
                }
            }
            if l > 0 {
                let act = mlp.activation_of(l - 1);
                delta = (0..layer.inputs)
                    .map(|c| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(r, &d)| d * layer.weight(r, c))
                            .sum();
                        back * act.derivative_from_output(a_in[c])
                    })
                    .collect();
            }
        }
    }

    if let Some((theta0, weight)) = anchor {
        if theta0.len() != grad.len() {
            return Err(Error::Shape(format!(
                "anchor has {} parameters, network has {}",
                theta0.len(),
                grad.len()
            )));
        }
        for ((g, p), p0) in grad.iter_mut().zip(mlp.params()).zip(theta0) {
            let d = p - p0;
            loss += weight * d * d;
            *g += 2.0 * weight * d;
        }
    }
    Ok((loss, grad))
}

/// Fits `mlp` to `data` with mini-batch momentum SGD.
pub fn train(mlp: &Mlp, data: &TrainingSet, cfg: &TrainerConfig) -> Result<TrainOutcome> {
    run(mlp, data, cfg, None)
}

/// Fine-tunes `mlp` towards preference targets while penalising distance from the
/// starting parameters with weight `cfg.anchor_weight`.
pub fn personalize(mlp: &Mlp, prefs: &TrainingSet, cfg: &TrainerConfig) -> Result<TrainOutcome> {
    if !(cfg.anchor_weight > 0.0) {
        return Err(Error::Training(
            "personalization needs a positive anchor weight".into(),
        ));
    }
    if prefs.is_empty() {
        return Err(Error::Training("empty preference set".into()));
    }
    let anchor = mlp.params();
    run(mlp, prefs, cfg, Some(&anchor))
}

fn run(
    mlp: &Mlp,
    data: &TrainingSet,
    cfg: &TrainerConfig,
    anchor: Option<&[f64]>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    mlp.validate()?;
    data.validate(mlp.input_dim())?;
    if data.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }

    let mut model = mlp.clone();
    let mut theta = model.params();
    let mut velocity = vec![0.0; theta.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);
    let lr = cfg.learning_rate;
    // The anchor penalty is applied as an exact proximal step so that very large weights
    // pull towards the anchor without making the explicit update unstable.
    let shrink = 1.0 / (1.0 + 2.0 * lr * cfg.anchor_weight);

    let mut batch_x = Vec::with_capacity(cfg.batch_size);
    let mut batch_t = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch_x.clear();
            batch_t.clear();
            for &i in chunk {
                batch_x.push(data.inputs[i].clone());
                batch_t.push(data.targets[i].clone());
            }
            let (_, grad) = loss_and_gradient(&model, &batch_x, &batch_t, None)?;
            for ((v, p), g) in velocity.iter_mut().zip(theta.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - lr * g;
                *p += *v;
            }
            if let Some(theta0) = anchor {
                for (p, p0) in theta.iter_mut().zip(theta0) {
                    *p = (*p + 2.0 * lr * cfg.anchor_weight * p0) * shrink;
                }
            }
            model.set_params(&theta)?;
        }
        let penalty = anchor.map(|a| (a, cfg.anchor_weight));
        let (loss, _) = loss_and_gradient(&model, &data.inputs, &data.targets, penalty)?;
        if !loss.is_finite() || theta.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
    }
    Ok(TrainOutcome {
        model,
        loss_history: history,
    })
}

/// Largest absolute difference in dB between the network and `data` targets.
pub fn max_abs_error_db(mlp: &Mlp, data: &TrainingSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        for (g, target) in mlp.prescribe(x)?.iter().zip(t) {
            worst = worst.max((g - target).abs());
        }
    }
    Ok(worst)
}
