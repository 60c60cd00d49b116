//! Versioned JSON model files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "layer_sizes": [6, 8, 6],
//!   "activations": { "hidden": "tanh", "output": "identity" },
//!   "normalization": {
//!     "input": { "offset_db": 60.0, "scale_db": 40.0 },
//!     "output": { "offset_db": 0.0, "scale_db": 40.0 }
//!   },
//!   "weights": [[...], [...]],
//!   "biases": [[...], [...]]
//! }
//! ```
//!
//! `weights[i]` is layer `i` flattened row-major as `layer_sizes[i+1] x layer_sizes[i]`.

use std::fs;
use std::path::Path;

use nnhac_core::prescription::{Activation, Layer, Mlp, Normalization};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    layer_sizes: Vec<usize>,
    activations: Activations,
    normalization: Norms,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Activations {
    hidden: String,
    output: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Norms {
    input: Norm,
    output: Norm,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Norm {
    offset_db: f64,
    scale_db: f64,
}

impl From<Normalization> for Norm {
    fn from(n: Normalization) -> Self {
        Self {
            offset_db: n.offset_db,
            scale_db: n.scale_db,
        }
    }
}

impl From<Norm> for Normalization {
    fn from(n: Norm) -> Self {
        Self {
            offset_db: n.offset_db,
            scale_db: n.scale_db,
        }
    }
}

pub fn to_json(mlp: &Mlp) -> Result<String> {
    mlp.validate()?;
    let file = ModelFile {
        version: MODEL_VERSION,
        layer_sizes: mlp.layer_sizes(),
        activations: Activations {
            hidden: mlp.hidden_activation.name().into(),
            output: mlp.output_activation.name().into(),
        },
        normalization: Norms {
            input: mlp.input_norm.into(),
            output: mlp.output_norm.into(),
        },
        weights: mlp.layers.iter().map(|l| l.weights.clone()).collect(),
        biases: mlp.layers.iter().map(|l| l.biases.clone()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> std::result::Result<Mlp, String> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if file.version != MODEL_VERSION {
        return Err(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            file.version
        ));
    }
    let layers = file.layer_sizes.len().saturating_sub(1);
    if layers == 0 {
        return Err("layer_sizes needs at least two entries".into());
    }
    if file.weights.len() != layers || file.biases.len() != layers {
        return Err(format!(
            "layer_sizes describes {layers} layers but {} weight and {} bias arrays were given",
            file.weights.len(),
            file.biases.len()
        ));
    }
    let activation = |name: &str| {
        Activation::from_name(name).ok_or_else(|| format!("unknown activation {name:?}"))
    };
    let mlp = Mlp {
        layers: file
            .layer_sizes
            .windows(2)
            .zip(file.weights)
            .zip(file.biases)
            .map(|((dims, weights), biases)| Layer {
                inputs: dims[0],
                outputs: dims[1],
                weights,
                biases,
            })
            .collect(),
        hidden_activation: activation(&file.activations.hidden)?,
        output_activation: activation(&file.activations.output)?,
        input_norm: file.normalization.input.into(),
        output_norm: file.normalization.output.into(),
    };
    mlp.validate().map_err(|e| match e {
        nnhac_core::Error::Model(msg) => msg,
        other => other.to_string(),
    })?;
    Ok(mlp)
}

pub fn save_model(mlp: &Mlp, path: &Path) -> Result<()> {
    let text = to_json(mlp)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Mlp> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text).map_err(|message| Error::MalformedModel {
        path: path.into(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Mlp::new_random(&[6, 8, 6], 12).unwrap();
        let back = from_json(&to_json(&net).unwrap()).unwrap();
        let bits = |m: &Mlp| m.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&net));
        assert_eq!(back, net);
        for l in [0.0, 33.3, 65.0, 101.7] {
            let a = net.forward(&[l; 6]).unwrap();
            let b = back.forward(&[l; 6]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn truncated_file_is_malformed() {
        let text = to_json(&Mlp::new_random(&[6, 8, 6], 1).unwrap()).unwrap();
        assert!(from_json(&text[..text.len() / 2]).is_err());
    }

    #[test]
    fn wrong_dimensions_name_the_layer() {
        let text = to_json(&Mlp::new_random(&[6, 8, 6], 1).unwrap()).unwrap();
        let broken = text.replacen(
            "\"layer_sizes\": [\n    6,\n    8,",
            "\"layer_sizes\": [\n    6,\n    7,",
            1,
        );
        assert_ne!(broken, text);
        let err = from_json(&broken).unwrap_err();
        assert!(err.starts_with("layer 0"), "{err}");
    }

    #[test]
    fn version_is_checked() {
        let text = to_json(&Mlp::new_random(&[6, 8, 6], 1).unwrap()).unwrap();
        let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(from_json(&bumped).unwrap_err().contains("version"));
    }
}
