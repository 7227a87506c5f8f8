//! Adam optimizer with bias correction.

use super::{LmError, ModelConfig, Parameters};
use serde::{Deserialize, Serialize};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Parameters,
    pub v: Parameters,
}

impl AdamState {
    pub fn new(cfg: &ModelConfig) -> Self {
        Self {
            step: 0,
            m: Parameters::zeros(cfg),
            v: Parameters::zeros(cfg),
        }
    }
}

/// One Adam update, in place. Deterministic; increments the step counter.
pub fn optimizer_step(
    params: &mut Parameters,
    grads: &Parameters,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), LmError> {
    params.check_same_shape(grads)?;
    params.check_same_shape(&state.m)?;
    params.check_same_shape(&state.v)?;

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);

    let mut p_tensors = params.tensors_mut();
    let g_tensors = grads.tensors();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();

    for idx in 0..p_tensors.len() {
        let p = &mut p_tensors[idx];
        let g = &g_tensors[idx];
        let m = &mut m_tensors[idx];
        let v = &mut v_tensors[idx];
        for i in 0..p.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// Linearly decayed learning rate: full at step 0, zero at `total_steps`.
pub fn linear_lr(base_lr: f64, step: u64, total_steps: u64) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let frac = 1.0 - (step as f64 / total_steps as f64).min(1.0);
    base_lr * frac
}
