use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, numeric_fault, Result};

/// Adam hyper-parameters. Weight decay is decoupled (applied to the
/// parameters directly, scaled by the learning rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-6, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, n_params: usize) -> Self {
        Self { config, step: 0, first_moment: vec![0.0; n_params], second_moment: vec![0.0; n_params] }
    }
}

/// One bias-corrected Adam update with decoupled weight decay.
///
/// Inputs are validated before anything is written, so on error both
/// `params` and `state` are untouched.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(invalid!(
            "adam shape mismatch: params {n}, grads {}, moments {}/{}",
            grads.len(),
            state.first_moment.len(),
            state.second_moment.len()
        ));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(numeric_fault!("non-finite gradient at parameter index {i}"));
    }

    let AdamConfig { learning_rate: lr, beta1, beta2, epsilon, weight_decay } = state.config;
    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - libm::pow(beta1, t);
    let bias2 = 1.0 - libm::pow(beta2, t);

    for (((p, &g), m), v) in
        params.iter_mut().zip(grads).zip(state.first_moment.iter_mut()).zip(state.second_moment.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        let decay = lr * weight_decay * *p;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + epsilon) + decay;
    }
    Ok(())
}
