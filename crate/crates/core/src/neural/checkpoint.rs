//! JSON model checkpoints: layer widths, flattened row-major weights and
//! biases, optimizer hyperparameters and the training seed. JSON floats are
//! written in shortest round-trip form, so a load reproduces the parameters
//! bit-exactly.

use super::{AdamConfig, Layer, MlpParams, NeuralError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub widths: Vec<usize>,
    pub layers: Vec<CheckpointLayer>,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointLayer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Checkpoint {
    pub fn from_params(params: &MlpParams, optimizer: AdamConfig, seed: u64) -> Self {
        Checkpoint {
            widths: params.widths(),
            layers: params
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    weights: l.weights.clone(),
                    biases: l.biases.clone(),
                })
                .collect(),
            optimizer,
            seed,
        }
    }

    pub fn into_params(self) -> Result<(MlpParams, AdamConfig, u64), NeuralError> {
        if self.widths.len() < 2 || self.layers.len() != self.widths.len() - 1 {
            return Err(NeuralError::Checkpoint {
                message: "layer count does not match widths".into(),
            });
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.into_iter().enumerate() {
            let (inputs, outputs) = (self.widths[i], self.widths[i + 1]);
            if l.weights.len() != inputs * outputs || l.biases.len() != outputs {
                return Err(NeuralError::Checkpoint {
                    message: format!("layer {i} has inconsistent shapes"),
                });
            }
            layers.push(Layer {
                weights: l.weights,
                biases: l.biases,
                inputs,
                outputs,
            });
        }
        Ok((MlpParams { layers }, self.optimizer, self.seed))
    }
}

pub fn save_checkpoint(
    path: &Path,
    params: &MlpParams,
    optimizer: AdamConfig,
    seed: u64,
) -> Result<(), NeuralError> {
    let ckpt = Checkpoint::from_params(params, optimizer, seed);
    let json = serde_json::to_string(&ckpt).expect("checkpoint serializes");
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpParams, AdamConfig, u64), NeuralError> {
    let data = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&data).map_err(|e| NeuralError::Checkpoint {
        message: e.to_string(),
    })?;
    ckpt.into_params()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let params = MlpParams::init(1234);
        save_checkpoint(&path, &params, AdamConfig::default(), 1234).unwrap();
        let (loaded, optimizer, seed) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(optimizer, AdamConfig::default());
        assert_eq!(seed, 1234);
    }

    #[test]
    fn malformed_shapes_are_rejected() {
        let params = MlpParams::init_with_widths(&[4, 3], 0);
        let mut ckpt = Checkpoint::from_params(&params, AdamConfig::default(), 0);
        ckpt.layers[0].weights.pop();
        assert!(matches!(
            ckpt.into_params(),
            Err(NeuralError::Checkpoint { .. })
        ));
    }
}
