//! Adam optimizer state and update rule.

use super::model::{GradStore, ParamStore};
use crate::error::{CoreError, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero-initialized moments congruent with `params`.
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let m = params.slots().iter().map(|s| vec![0.0; s.len()]).collect();
        let v = params.slots().iter().map(|s| vec![0.0; s.len()]).collect();
        AdamState { lr, beta1: ADAM_BETA1, beta2: ADAM_BETA2, eps: ADAM_EPS, step: 0, m, v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update: θ ← θ − lr·m̂/(√v̂ + eps).
    pub fn step(&mut self, params: &mut ParamStore, grads: &GradStore) -> Result<()> {
        if !params.congruent_with(grads) || self.m.len() != params.num_slots() {
            return Err(CoreError::ShapeMismatch("params, grads and moments must be congruent".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for slot in 0..params.num_slots() {
            let g = grads.slot(slot);
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            let p = params.slot_mut(slot);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
