//! Adam optimizer with bias correction.

use super::{Gradients, MlpParams, NeuralError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update in place. Rejects non-finite gradient entries,
    /// naming the offending layer.
    pub fn step(&mut self, params: &mut MlpParams, grads: &Gradients) -> Result<(), NeuralError> {
        for (li, lg) in grads.layers.iter().enumerate() {
            if lg.weights.iter().chain(lg.biases.iter()).any(|g| !g.is_finite()) {
                return Err(NeuralError::NonFinite { layer: li });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        for (li, layer) in params.layers.iter_mut().enumerate() {
            let g = &grads.layers[li];
            let m = &mut self.m.layers[li];
            let v = &mut self.v.layers[li];
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            };
            for i in 0..layer.weights.len() {
                update(
                    &mut layer.weights[i],
                    g.weights[i],
                    &mut m.weights[i],
                    &mut v.weights[i],
                );
            }
            for i in 0..layer.biases.len() {
                update(
                    &mut layer.biases[i],
                    g.biases[i],
                    &mut m.biases[i],
                    &mut v.biases[i],
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut params = MlpParams::init_with_widths(&[4, 3], 1);
        let before = params.clone();
        let mut state = AdamState::new(&params, AdamConfig::default());
        let grads = Gradients::zeros_like(&params);
        state.step(&mut params, &grads).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn update_is_deterministic() {
        let run = || {
            let mut params = MlpParams::init_with_widths(&[4, 3], 2);
            let mut state = AdamState::new(&params, AdamConfig::default());
            let mut grads = Gradients::zeros_like(&params);
            for (i, g) in grads.layers[0].weights.iter_mut().enumerate() {
                *g = (i as f64 - 5.0) * 0.1;
            }
            for _ in 0..5 {
                state.step(&mut params, &grads).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn first_step_moves_by_about_the_learning_rate() {
        // Single scalar parameter, constant unit gradient: at t = 1 the
        // bias-corrected update is lr * 1 / (1 + eps).
        let mut params = MlpParams::init_with_widths(&[1, 1], 0);
        params.layers[0].weights[0] = 0.25;
        params.layers[0].biases[0] = 0.0;
        let mut state = AdamState::new(&params, AdamConfig::default());
        let mut grads = Gradients::zeros_like(&params);
        grads.layers[0].weights[0] = 1.0;
        state.step(&mut params, &grads).unwrap();
        let delta = params.layers[0].weights[0] - 0.25;
        assert!((delta + 1e-3).abs() < 1e-10, "delta {delta}");
    }

    #[test]
    fn non_finite_gradient_names_the_layer() {
        let mut params = MlpParams::init_with_widths(&[3, 3, 2], 0);
        let mut state = AdamState::new(&params, AdamConfig::default());
        let mut grads = Gradients::zeros_like(&params);
        grads.layers[1].biases[0] = f64::NAN;
        match state.step(&mut params, &grads) {
            Err(NeuralError::NonFinite { layer: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
