use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::slm::BandLevels;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Self::Tanh => libm::tanh(z),
            Self::Identity => z,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub(crate) fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Self::Tanh),
            "identity" => Some(Self::Identity),
            _ => None,
        }
    }
}

/// Affine map between dB and network units: `net = (db - offset_db) / scale_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub offset_db: f64,
    pub scale_db: f64,
}

impl Normalization {
    pub const LEVELS: Self = Self {
        offset_db: 60.0,
        scale_db: 40.0,
    };
    pub const GAINS: Self = Self {
        offset_db: 0.0,
        scale_db: 40.0,
    };

    #[inline]
    pub fn to_net(&self, db: f64) -> f64 {
        (db - self.offset_db) / self.scale_db
    }

    #[inline]
    pub fn to_db(&self, net: f64) -> f64 {
        net * self.scale_db + self.offset_db
    }
}

/// Dense layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(r, &b)| {
            let row = &self.weights[r * self.inputs..(r + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
        }));
    }
}

/// Feed-forward prescription network: band levels in dB SPL to band gains in dB.
///
/// Hidden layers share one activation; the last layer uses `output_activation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub input_norm: Normalization,
    pub output_norm: Normalization,
}

impl Mlp {
    /// Default topology for `bands` bands: one hidden layer of 8 units.
    pub fn default_sizes(bands: usize) -> Vec<usize> {
        vec![bands, 8, bands]
    }

    /// Seeded uniform initialization in `±1/sqrt(fan_in)`, tanh hidden, identity output and
    /// the default level/gain normalization.
    pub fn new_random(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / libm::sqrt(fan_in as f64);
                let mut layer = Layer::zeros(fan_in, fan_out);
                for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                    *v = rng.gen_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(Self::with_layers(layers))
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect();
        Ok(Self::with_layers(layers))
    }

    fn with_layers(layers: Vec<Layer>) -> Self {
        Self {
            layers,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Identity,
            input_norm: Normalization::LEVELS,
            output_norm: Normalization::GAINS,
        }
    }

    /// Checks that dimensions chain and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Model("network has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.inputs == 0 || layer.outputs == 0 {
                return Err(Error::Model(format!("layer {i} has a zero dimension")));
            }
            if layer.weights.len() != layer.inputs * layer.outputs {
                return Err(Error::Model(format!(
                    "layer {i}: expected {}x{} = {} weights, found {}",
                    layer.outputs,
                    layer.inputs,
                    layer.inputs * layer.outputs,
                    layer.weights.len()
                )));
            }
            if layer.biases.len() != layer.outputs {
                return Err(Error::Model(format!(
                    "layer {i}: expected {} biases, found {}",
                    layer.outputs,
                    layer.biases.len()
                )));
            }
            if i > 0 && self.layers[i - 1].outputs != layer.inputs {
                return Err(Error::Model(format!(
                    "layer {i}: takes {} inputs but layer {} produces {}",
                    layer.inputs,
                    i - 1,
                    self.layers[i - 1].outputs
                )));
            }
            if !layer
                .weights
                .iter()
                .chain(&layer.biases)
                .all(|v| v.is_finite())
            {
                return Err(Error::Model(format!("layer {i} has non-finite parameters")));
            }
        }
        if self.input_dim() != self.output_dim() {
            return Err(Error::Model(format!(
                "network maps {} levels to {} gains",
                self.input_dim(),
                self.output_dim()
            )));
        }
        for (name, norm) in [("input", self.input_norm), ("output", self.output_norm)] {
            if !norm.offset_db.is_finite() || !norm.scale_db.is_finite() || norm.scale_db == 0.0 {
                return Err(Error::Model(format!("{name} normalization is degenerate")));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// All parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// Inverse of [`Mlp::params`].
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.biases.len());
            layer.weights.copy_from_slice(w);
            layer.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub(crate) fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Post-activation values for every layer, starting with the normalized input.
    pub(crate) fn activations(&self, levels_db: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(
            levels_db
                .iter()
                .map(|&l| self.input_norm.to_net(l))
                .collect::<Vec<_>>(),
        );
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(&acts[i], &mut z);
            z.iter_mut().for_each(|v| *v = act.apply(*v));
            acts.push(z);
        }
        acts
    }

    /// Gains in dB for levels in dB SPL.
    pub fn forward(&self, levels_db: &[f64]) -> Result<Vec<f64>> {
        if levels_db.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} levels, got {}",
                self.input_dim(),
                levels_db.len()
            )));
        }
        let mut acts = self.activations(levels_db);
        let mut out = acts.pop().unwrap_or_default();
        out.iter_mut().for_each(|v| *v = self.output_norm.to_db(*v));
        Ok(out)
    }

    pub fn prescribe(&self, levels: &BandLevels) -> Result<Vec<f64>> {
        self.forward(levels.as_slice())
    }

    /// Function-preserving widening of hidden layer `layer` (an index into
    /// [`Mlp::layer_sizes`]) by `extra_units`.
    ///
    /// Each new unit copies the incoming weights and bias of a seeded random original unit.
    /// That unit's outgoing weights are halved and the copy receives the same halved
    /// weights, so the pair contributes exactly what the original did.
    pub fn widen(&self, layer: usize, extra_units: usize, seed: u64) -> Result<Mlp> {
        if layer == 0 || layer >= self.layers.len() {
            return Err(Error::Unsupported(format!(
                "only hidden layers can be widened; layer {layer} of a network with sizes {:?}",
                self.layer_sizes()
            )));
        }
        if extra_units == 0 {
            return Err(Error::Unsupported(
                "widening needs at least one unit".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let original = self.layers[layer - 1].outputs;
        for _ in 0..extra_units {
            let src = rng.gen_range(0..original);
            let (before, after) = out.layers.split_at_mut(layer);
            let incoming = &mut before[layer - 1];
            let outgoing = &mut after[0];

            let row: Vec<f64> =
                incoming.weights[src * incoming.inputs..(src + 1) * incoming.inputs].to_vec();
            incoming.weights.extend_from_slice(&row);
            incoming.biases.push(incoming.biases[src]);
            incoming.outputs += 1;

            let old_cols = outgoing.inputs;
            let mut weights = Vec::with_capacity(outgoing.outputs * (old_cols + 1));
            for r in 0..outgoing.outputs {
                let row = &outgoing.weights[r * old_cols..(r + 1) * old_cols];
                let shared = row[src] * 0.5;
                weights.extend(
                    row.iter()
                        .enumerate()
                        .map(|(c, &w)| if c == src { shared } else { w }),
                );
                weights.push(shared);
            }
            outgoing.weights = weights;
            outgoing.inputs += 1;
        }
        Ok(out)
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Model(format!(
            "need at least input and output sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Model(format!("zero-width layer in {layer_sizes:?}")));
    }
    if layer_sizes[0] != layer_sizes[layer_sizes.len() - 1] {
        return Err(Error::Model(format!(
            "input and output widths differ in {layer_sizes:?}"
        )));
    }
    Ok(())
}
