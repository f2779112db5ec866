//! Adam optimizer with bias correction.

use super::{Gradients, ModelState};

#[derive(Debug, Clone, Copy, PartialEq)]
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

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Gradients,
    second: Gradients,
}

impl AdamState {
    /// Zero-initialized moments shaped like the model's parameters.
    pub fn new(model: &ModelState, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: Gradients::zeros_like(model),
            second: Gradients::zeros_like(model),
        }
    }
}

/// One Adam update over every parameter tensor, in declaration order.
pub fn adam_step(model: &mut ModelState, grads: &Gradients, state: &mut AdamState) {
    state.step += 1;
    let c = state.config;
    let t = state.step as f64;
    let bias1 = 1.0 - libm::pow(c.beta1, t);
    let bias2 = 1.0 - libm::pow(c.beta2, t);

    let mut param_slices = model.param_slices_mut();
    let grad_slices = grads.slices();
    let mut m_slices = state.first.slices_mut();
    let mut v_slices = state.second.slices_mut();
    debug_assert_eq!(param_slices.len(), grad_slices.len());
    for i in 0..param_slices.len() {
        update_slice(
            param_slices[i],
            grad_slices[i],
            m_slices[i],
            v_slices[i],
            &c,
            bias1,
            bias2,
        );
    }
}

fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    c: &AdamConfig,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= c.learning_rate * m_hat / (libm::sqrt(v_hat) + c.epsilon);
    }
}
