//! Central finite-difference check of [`backward`] against [`forward_train`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backprop::{backward, forward_train, BatchForward};
use super::layer::LayerSpec;
use super::{NetworkSpec, Tensor};
use crate::error::Result;

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error over all checked parameters.
    pub max_param_error: f64,
    /// Largest relative error over all checked input cells.
    pub max_input_error: f64,
    pub checked: usize,
    /// Perturbations that flipped a ReLU or max-pool decision and were not
    /// compared.
    pub skipped: usize,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }
}

/// Compares analytic gradients of the linear probe loss
/// `sum_b sum_k c[b][k] * logit[b][k]` (random `c`) with central
/// differences.
///
/// Parameters are stored as `f32`, so each is perturbed by a relative step
/// `h` and the difference is divided by the step actually representable.
/// At most `per_buffer` entries of every trainable buffer and of every input
/// are checked.
pub fn gradient_check(net: &NetworkSpec, inputs: &[Tensor], h: f64, per_buffer: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = net.n_classes();
    let coeffs: Vec<Tensor> =
        inputs.iter().map(|_| Tensor::from_raw(vec![n_out], (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let loss = |fwd: &BatchForward| -> f64 {
        fwd.logits().iter().zip(&coeffs).map(|(l, c)| l.data().iter().zip(c.data()).map(|(a, b)| a * b).sum::<f64>()).sum()
    };
    let base = forward_train(net, inputs)?;
    let pattern = decisions(net, &base);
    let grads = backward(net, &base, &coeffs)?;

    let mut report = GradCheckReport { max_param_error: 0.0, max_input_error: 0.0, checked: 0, skipped: 0 };
    let mut probe = net.clone();
    let buffers = probe.trainable_mut().len();
    for buf in 0..buffers {
        let len = probe.trainable_mut()[buf].len();
        for idx in pick(len, per_buffer, &mut rng) {
            let orig = probe.trainable_mut()[buf][idx];
            let step = (h * (orig as f64).abs().max(1.0)) as f32;
            let (hi, lo) = (orig + step, orig - step);
            probe.trainable_mut()[buf][idx] = hi;
            let fp = forward_train(&probe, inputs)?;
            probe.trainable_mut()[buf][idx] = lo;
            let fm = forward_train(&probe, inputs)?;
            probe.trainable_mut()[buf][idx] = orig;
            if decisions(&probe, &fp) != pattern || decisions(&probe, &fm) != pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (loss(&fp) - loss(&fm)) / (hi as f64 - lo as f64);
            report.max_param_error = report.max_param_error.max(rel_err(grads.buffers[buf][idx], numeric));
            report.checked += 1;
        }
    }

    let mut xs = inputs.to_vec();
    for b in 0..xs.len() {
        for idx in pick(xs[b].len(), per_buffer, &mut rng) {
            let orig = xs[b].data()[idx];
            let step = h * orig.abs().max(1.0);
            xs[b].data_mut()[idx] = orig + step;
            let fp = forward_train(net, &xs)?;
            xs[b].data_mut()[idx] = orig - step;
            let fm = forward_train(net, &xs)?;
            xs[b].data_mut()[idx] = orig;
            if decisions(net, &fp) != pattern || decisions(net, &fm) != pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (loss(&fp) - loss(&fm)) / (2.0 * step);
            report.max_input_error = report.max_input_error.max(rel_err(grads.inputs[b].data()[idx], numeric));
            report.checked += 1;
        }
    }
    Ok(report)
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-6 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn pick(len: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if len <= k {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, k).into_vec()
}

/// ReLU on/off states and max-pool winners of a forward pass.
fn decisions(net: &NetworkSpec, fwd: &BatchForward) -> (Vec<bool>, Vec<usize>) {
    let mut relu = Vec::new();
    let mut winners = Vec::new();
    for (k, layer) in net.layers().iter().enumerate() {
        match layer {
            LayerSpec::Relu => relu.extend(fwd.acts[k].iter().flat_map(|x| x.data().iter().map(|&v| v > 0.0))),
            LayerSpec::MaxPool(_) => {
                if let Some(a) = &fwd.argmax[k] {
                    winners.extend(a.iter().flatten().copied());
                }
            }
            _ => {}
        }
    }
    (relu, winners)
}
