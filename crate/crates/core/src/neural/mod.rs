//! The perception network: a plain MLP with hand-written forward and
//! backward passes. The shipped configuration maps a 128-entry feature
//! vector through hidden layers of 100, 80, 50, 25 neurons (ReLU between
//! layers) to a 10-class softmax.
//!
//! `forward`/`backward` are pure given the parameters; updates go through
//! [`adam::AdamState::step`] with a single writer.

pub mod adam;
pub mod checkpoint;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const INPUT_DIM: usize = 128;
pub const NUM_CLASSES: usize = 10;
/// Input width followed by each layer's output width.
pub const DEFAULT_WIDTHS: [usize; 6] = [128, 100, 80, 50, 25, 10];

/// Raw features are integers in 1..=255; the network sees them in [0, 1].
pub fn scale_features(raw: &[u8]) -> Vec<f64> {
    raw.iter().map(|&v| v as f64 / 255.0).collect()
}

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {message}")]
    Shape { message: String },
    #[error("non-finite gradient entry in layer {layer}")]
    NonFinite { layer: usize },
    #[error("checkpoint invalid: {message}")]
    Checkpoint { message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One affine layer; weights are row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Deterministic initialization for the default architecture: weights
    /// uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn init(seed: u64) -> Self {
        MlpParams::init_with_widths(&DEFAULT_WIDTHS, seed)
    }

    pub fn init_with_widths(widths: &[usize], seed: u64) -> Self {
        assert!(widths.len() >= 2, "need at least one layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (inputs, outputs) = (w[0], w[1]);
            let bound = (6.0 / (inputs + outputs) as f64).sqrt();
            let weights = (0..inputs * outputs)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(Layer {
                weights,
                biases: vec![0.0; outputs],
                inputs,
                outputs,
            });
        }
        MlpParams { layers }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }
}

/// Cached intermediate state of one forward pass. Replaying it through
/// [`backward`] reproduces exactly the gradients of the recorded pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    input: Vec<f64>,
    /// Pre-activation of every layer.
    pre_activations: Vec<Vec<f64>>,
    /// Post-activation of every layer (ReLU for hidden, softmax for last).
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Runs the network on one scaled feature vector; returns the class
/// distribution and the trace for the backward pass. Output entries are
/// positive and sum to one within 1e-9.
pub fn forward(params: &MlpParams, input: &[f64]) -> Result<(Vec<f64>, ForwardTrace), NeuralError> {
    if input.len() != params.input_dim() {
        return Err(NeuralError::Shape {
            message: format!(
                "input has {} entries, network expects {}",
                input.len(),
                params.input_dim()
            ),
        });
    }
    let n_layers = params.layers.len();
    let mut pre_activations = Vec::with_capacity(n_layers);
    let mut activations = Vec::with_capacity(n_layers);
    let mut current: Vec<f64> = input.to_vec();
    for (li, layer) in params.layers.iter().enumerate() {
        let mut z = layer.biases.clone();
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(current.iter()) {
                acc += w * x;
            }
            *zo += acc;
        }
        let a = if li + 1 == n_layers {
            softmax(&z)
        } else {
            z.iter().map(|&v| v.max(0.0)).collect()
        };
        pre_activations.push(z);
        current = a.clone();
        activations.push(a);
    }
    let output = current;
    Ok((
        output,
        ForwardTrace {
            input: input.to_vec(),
            pre_activations,
            activations,
        },
    ))
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Parameter gradients, same shapes as [`MlpParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (dst, src) in self.layers.iter_mut().zip(other.layers.iter()) {
            for (d, s) in dst.weights.iter_mut().zip(src.weights.iter()) {
                *d += s;
            }
            for (d, s) in dst.biases.iter_mut().zip(src.biases.iter()) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.biases {
                *b *= factor;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|&w| w == 0.0) && l.biases.iter().all(|&b| b == 0.0)
        })
    }
}

/// Backpropagates `grad_out = ∂loss/∂(softmax output)` through the recorded
/// pass, returning gradients for every weight and bias.
pub fn backward(
    params: &MlpParams,
    trace: &ForwardTrace,
    grad_out: &[f64],
) -> Result<Gradients, NeuralError> {
    let n_layers = params.layers.len();
    if trace.activations.len() != n_layers {
        return Err(NeuralError::Shape {
            message: "trace does not match the parameter stack".into(),
        });
    }
    if grad_out.len() != params.output_dim() {
        return Err(NeuralError::Shape {
            message: format!(
                "output gradient has {} entries, network produces {}",
                grad_out.len(),
                params.output_dim()
            ),
        });
    }

    let mut grads = Gradients::zeros_like(params);

    // Through the softmax: dz_i = p_i (g_i - sum_j g_j p_j).
    let p = trace.activations.last().unwrap();
    let dot: f64 = grad_out.iter().zip(p.iter()).map(|(g, pi)| g * pi).sum();
    let mut dz: Vec<f64> = p
        .iter()
        .zip(grad_out.iter())
        .map(|(pi, gi)| pi * (gi - dot))
        .collect();

    for li in (0..n_layers).rev() {
        let layer = &params.layers[li];
        let prev_activation: &[f64] = if li == 0 {
            &trace.input
        } else {
            &trace.activations[li - 1]
        };
        let lg = &mut grads.layers[li];
        for (o, &dzo) in dz.iter().enumerate() {
            lg.biases[o] += dzo;
            let row = &mut lg.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (w, &a) in row.iter_mut().zip(prev_activation.iter()) {
                *w += dzo * a;
            }
        }
        if li == 0 {
            break;
        }
        // da_{l-1} = W^T dz, then through the ReLU of layer l-1.
        let mut da = vec![0.0; layer.inputs];
        for (o, &dzo) in dz.iter().enumerate() {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (d, &w) in da.iter_mut().zip(row.iter()) {
                *d += w * dzo;
            }
        }
        let z_prev = &trace.pre_activations[li - 1];
        dz = da
            .iter()
            .zip(z_prev.iter())
            .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
            .collect();
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        assert_eq!(MlpParams::init(42), MlpParams::init(42));
        assert_ne!(MlpParams::init(42), MlpParams::init(43));
    }

    #[test]
    fn default_layer_shapes() {
        let p = MlpParams::init(0);
        let shapes: Vec<(usize, usize)> =
            p.layers.iter().map(|l| (l.outputs, l.inputs)).collect();
        assert_eq!(
            shapes,
            vec![(100, 128), (80, 100), (50, 80), (25, 50), (10, 25)]
        );
        assert!(p
            .layers
            .iter()
            .all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn forward_output_is_a_distribution() {
        let p = MlpParams::init(1);
        let input: Vec<f64> = (0..128).map(|i| (i % 255 + 1) as f64 / 255.0).collect();
        let (out, _) = forward(&p, &input).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|&v| v > 0.0));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_parameters_give_uniform_output() {
        let mut p = MlpParams::init(7);
        for layer in &mut p.layers {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let (out, _) = forward(&p, &vec![0.5; 128]).unwrap();
        for v in out {
            assert!((v - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_input_length_is_a_shape_error() {
        let p = MlpParams::init(0);
        assert!(matches!(
            forward(&p, &[0.0; 5]),
            Err(NeuralError::Shape { .. })
        ));
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let p = MlpParams::init(3);
        let (_, trace) = forward(&p, &vec![0.3; 128]).unwrap();
        let g = backward(&p, &trace, &[0.0; 10]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn backward_matches_finite_differences() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // Small network keeps the finite-difference sweep cheap while still
        // exercising every layer kind.
        let widths = [9usize, 7, 6, 5];
        let h = 1e-5;
        for case in 0..20 {
            let params = MlpParams::init_with_widths(&widths, case);
            let input: Vec<f64> = (0..widths[0]).map(|_| rng.random_range(0.0..1.0)).collect();
            let grad_out: Vec<f64> = (0..widths[widths.len() - 1])
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let (_, trace) = forward(&params, &input).unwrap();
            let analytic = backward(&params, &trace, &grad_out).unwrap();
            let loss = |p: &MlpParams| -> f64 {
                let (out, _) = forward(p, &input).unwrap();
                out.iter().zip(grad_out.iter()).map(|(o, g)| o * g).sum()
            };
            // A pre-activation within the step size of zero sits on the ReLU
            // kink, where central differences are meaningless; skip those.
            let near_kink = |li: usize, unit: usize| {
                li + 1 < widths.len() - 1 && trace.pre_activations[li][unit].abs() < 1e-3
            };
            for li in 0..params.layers.len() {
                for _ in 0..6 {
                    let wi = rng.random_range(0..params.layers[li].weights.len());
                    if near_kink(li, wi / params.layers[li].inputs) {
                        continue;
                    }
                    let mut up = params.clone();
                    up.layers[li].weights[wi] += h;
                    let mut down = params.clone();
                    down.layers[li].weights[wi] -= h;
                    let fd = (loss(&up) - loss(&down)) / (2.0 * h);
                    let an = analytic.layers[li].weights[wi];
                    let denom = an.abs().max(fd.abs()).max(1e-7);
                    assert!(
                        (an - fd).abs() / denom < 1e-4,
                        "case {case} layer {li} weight {wi}: {an} vs {fd}"
                    );
                }
                let bi = rng.random_range(0..params.layers[li].biases.len());
                if near_kink(li, bi) {
                    continue;
                }
                let mut up = params.clone();
                up.layers[li].biases[bi] += h;
                let mut down = params.clone();
                down.layers[li].biases[bi] -= h;
                let fd = (loss(&up) - loss(&down)) / (2.0 * h);
                let an = analytic.layers[li].biases[bi];
                let denom = an.abs().max(fd.abs()).max(1e-7);
                assert!(
                    (an - fd).abs() / denom < 1e-4,
                    "case {case} layer {li} bias {bi}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn dead_relu_unit_gets_no_weight_gradient() {
        // Two layers; force unit 0 of the first layer to a negative
        // pre-activation via a large negative bias.
        let mut p = MlpParams::init_with_widths(&[4, 3, 2], 5);
        p.layers[0].biases[0] = -100.0;
        let input = vec![0.5, 0.25, 0.75, 1.0];
        let (_, trace) = forward(&p, &input).unwrap();
        assert!(trace.pre_activations[0][0] < 0.0);
        let g = backward(&p, &trace, &[1.0, -1.0]).unwrap();
        let incoming = &g.layers[0].weights[0..4];
        assert!(incoming.iter().all(|&w| w == 0.0));
        assert_eq!(g.layers[0].biases[0], 0.0);
    }

    #[test]
    fn replaying_a_trace_is_bit_identical() {
        let p = MlpParams::init(9);
        let input: Vec<f64> = (0..128).map(|i| ((i * 37) % 255 + 1) as f64 / 255.0).collect();
        let (out1, trace) = forward(&p, &input).unwrap();
        let (out2, _) = forward(&p, &trace.input).unwrap();
        assert_eq!(out1, out2);
        assert_eq!(out1, trace.output());
    }

    #[test]
    fn feature_scaling_maps_to_unit_interval() {
        let scaled = scale_features(&[1, 128, 255]);
        assert!((scaled[0] - 1.0 / 255.0).abs() < 1e-15);
        assert!((scaled[2] - 1.0).abs() < 1e-15);
    }
}
