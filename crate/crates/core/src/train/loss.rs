use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Focal loss `-(1 - p)^gamma * ln p` of the softmax probability `p` of
/// `label`, with its gradient with respect to the logits.
pub fn focal_loss(logits: &Tensor, label: usize, gamma: f64) -> Result<(f64, Tensor)> {
    let z = logits.data();
    if label >= z.len() {
        return Err(Error::Range(format!("label {label} for {} logits", z.len())));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("focal gamma must be finite and >= 0, got {gamma}")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let q: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let log_p = z[label] - max - total.ln();
    let p = q[label];
    let one_minus = -f64::exp_m1(log_p).max(-1.0);
    let one_minus = one_minus.max(0.0);

    let loss = if gamma == 0.0 { -log_p } else { -one_minus.powf(gamma) * log_p };

    // dL/dz_k = dL/dp * p * (delta_ky - q_k), with p * dL/dp folded to keep
    // it finite as p -> 0.
    let p_dl_dp = if gamma == 0.0 {
        -1.0
    } else {
        let focal = one_minus.powf(gamma);
        let pull = if one_minus > 0.0 { gamma * one_minus.powf(gamma - 1.0) * p * log_p } else { 0.0 };
        pull - focal
    };
    let grad = q
        .iter()
        .enumerate()
        .map(|(k, &qk)| p_dl_dp * (if k == label { 1.0 } else { 0.0 } - qk))
        .collect();
    Ok((loss, Tensor::from_raw(logits.shape().to_vec(), grad)))
}
