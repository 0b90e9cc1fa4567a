use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    /// Added to the root of the second moment.
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |b: f64| (0.0..1.0).contains(&b);
        if !ok(self.beta1) || !ok(self.beta2) {
            return Err(Error::Config(format!("adam betas must lie in [0, 1), got {} and {}", self.beta1, self.beta2)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("adam epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// First and second moments per parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(lens: &[usize]) -> Self {
        Self { m: lens.iter().map(|&n| vec![0.0; n]).collect(), v: lens.iter().map(|&n| vec![0.0; n]).collect(), step: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[Vec<f64>], state: &mut AdamState, lr: f64, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape("optimizer", format!("{} buffers, {} gradients, {} moments", params.len(), grads.len(), state.m.len())));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::shape("optimizer", format!("buffer {i}: {} params, {} gradients", p.len(), g.len())));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            let g = grads[i][j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let mhat = m[j] / c1;
            let vhat = v[j] / c2;
            p[j] -= lr * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
