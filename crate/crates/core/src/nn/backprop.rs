//! Training-mode forward pass over a mini-batch and reverse-mode gradients.
//!
//! Batch norm uses batch statistics here, which couples the samples of a
//! batch; every other layer is processed per sample (in parallel when the
//! `parallel` feature is on).

use super::layer::{BatchNorm, LayerSpec};
use super::ops::{self, Chw, WeightMap};
use super::{NetworkSpec, Tensor};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone)]
struct BnCache {
    mean: Vec<f64>,
    var: Vec<f64>,
    inv_std: Vec<f64>,
    /// Normalized activations per sample.
    xhat: Vec<Vec<f64>>,
}

/// Activations of a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchForward {
    /// `acts[k][b]`: input of layer `k` for sample `b`; `acts[L]` holds logits.
    pub(super) acts: Vec<Vec<Tensor>>,
    bn: Vec<Option<BnCache>>,
    pub(super) argmax: Vec<Option<Vec<Vec<usize>>>>,
}

impl BatchForward {
    pub fn logits(&self) -> &[Tensor] {
        self.acts.last().expect("non-empty")
    }

    pub fn batch_size(&self) -> usize {
        self.acts[0].len()
    }
}

/// Gradients of the trainable buffers, in [`NetworkSpec`] declaration
/// order (weights then bias; batch-norm gamma then beta).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub buffers: Vec<Vec<f64>>,
    /// Gradient with respect to each input sample.
    pub inputs: Vec<Tensor>,
}

fn bn_train_forward(b: &BatchNorm, xs: &[Tensor]) -> (Vec<Tensor>, BnCache) {
    let shape = xs[0].shape().to_vec();
    let per = ops::per_channel(&shape);
    let m = (per * xs.len()) as f64;
    let mut mean = vec![0.0; b.channels];
    let mut var = vec![0.0; b.channels];
    for ch in 0..b.channels {
        let cells = || xs.iter().flat_map(|x| x.data()[ch * per..(ch + 1) * per].iter());
        let mu = cells().sum::<f64>() / m;
        mean[ch] = mu;
        var[ch] = cells().map(|v| (v - mu).powi(2)).sum::<f64>() / m;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + b.eps).sqrt()).collect();
    let mut xhat = Vec::with_capacity(xs.len());
    let mut outs = Vec::with_capacity(xs.len());
    for x in xs {
        let mut h = Vec::with_capacity(x.len());
        let mut y = Vec::with_capacity(x.len());
        for ch in 0..b.channels {
            for &v in &x.data()[ch * per..(ch + 1) * per] {
                let n = (v - mean[ch]) * inv_std[ch];
                h.push(n);
                y.push(b.gamma[ch] as f64 * n + b.beta[ch] as f64);
            }
        }
        xhat.push(h);
        outs.push(Tensor::from_raw(shape.clone(), y));
    }
    (outs, BnCache { mean, var, inv_std, xhat })
}

/// Training-mode forward pass over a batch of same-shaped inputs.
pub fn forward_train(net: &NetworkSpec, inputs: &[Tensor]) -> Result<BatchForward> {
    if inputs.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    if let Some(x) = inputs.iter().find(|x| x.shape() != net.input_shape()) {
        return Err(Error::shape("input", format!("expected {:?}, got {:?}", net.input_shape(), x.shape())));
    }
    let n_layers = net.layers().len();
    let mut acts = Vec::with_capacity(n_layers + 1);
    let mut bn = vec![None; n_layers];
    let mut argmax = vec![None; n_layers];
    acts.push(inputs.to_vec());
    for (k, layer) in net.layers().iter().enumerate() {
        let xs = &acts[k];
        let next = match layer {
            LayerSpec::BatchNorm(b) => {
                let (ys, cache) = bn_train_forward(b, xs);
                bn[k] = Some(cache);
                ys
            }
            LayerSpec::MaxPool(p) => {
                let shape = xs[0].shape().to_vec();
                let out_shape = layer.output_shape(&shape, k)?;
                let res = par::map(xs, |x| ops::max_pool_forward(p, x.data(), Chw::of(&shape)));
                let (ys, args): (Vec<_>, Vec<_>) =
                    res.into_iter().map(|(y, a)| (Tensor::from_raw(out_shape.clone(), y), a)).unzip();
                argmax[k] = Some(args);
                ys
            }
            _ => par::map(xs, |x| super::network::apply_inference(layer, x)),
        };
        acts.push(next);
    }
    Ok(BatchForward { acts, bn, argmax })
}

/// Back-propagates `grad_logits` (one per sample) through the batch.
pub fn backward(net: &NetworkSpec, fwd: &BatchForward, grad_logits: &[Tensor]) -> Result<Gradients> {
    let batch = fwd.batch_size();
    if grad_logits.len() != batch {
        return Err(Error::shape("loss", format!("{} gradients for a batch of {batch}", grad_logits.len())));
    }
    let mut grads: Vec<Tensor> = grad_logits.to_vec();
    let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(net.layers().len());
    for (k, layer) in net.layers().iter().enumerate().rev() {
        let xs = &fwd.acts[k];
        let in_shape = xs[0].shape().to_vec();
        let dims = || Chw::of(&in_shape);
        let (next, params): (Vec<Tensor>, Vec<Vec<f64>>) = match layer {
            LayerSpec::Conv2d(c) => {
                let res = par::map_indexed(batch, |b| {
                    let g = grads[b].data();
                    let gi = ops::conv_transpose(c, g, dims(), WeightMap::Original);
                    let (gw, gb) = ops::conv_param_grads(c, xs[b].data(), dims(), g);
                    (gi, gw, gb)
                });
                reduce_params(res, &in_shape)
            }
            LayerSpec::Dense(d) => {
                let res = par::map_indexed(batch, |b| {
                    let g = grads[b].data();
                    let gi = ops::dense_transpose(d, g, WeightMap::Original);
                    let (gw, gb) = ops::dense_param_grads(d, xs[b].data(), g);
                    (gi, gw, gb)
                });
                reduce_params(res, &in_shape)
            }
            LayerSpec::Relu => (
                (0..batch)
                    .map(|b| {
                        let d = xs[b].data().iter().zip(grads[b].data()).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 });
                        Tensor::from_raw(in_shape.clone(), d.collect())
                    })
                    .collect(),
                vec![],
            ),
            LayerSpec::AvgPool(p) => (
                par::map_indexed(batch, |b| {
                    Tensor::from_raw(
                        in_shape.clone(),
                        ops::avg_pool_transpose(p, grads[b].data(), dims(), WeightMap::Original),
                    )
                }),
                vec![],
            ),
            LayerSpec::MaxPool(_) => {
                let args = fwd.argmax[k].as_ref().expect("max pool argmax cached");
                (
                    (0..batch)
                        .map(|b| {
                            Tensor::from_raw(in_shape.clone(), ops::max_pool_route(grads[b].data(), &args[b], xs[b].len()))
                        })
                        .collect(),
                    vec![],
                )
            }
            LayerSpec::BatchNorm(bnl) => {
                let cache = fwd.bn[k].as_ref().expect("batch norm cache");
                bn_backward(bnl, cache, &grads, &in_shape)
            }
            LayerSpec::Flatten => (
                grads.iter().map(|g| Tensor::from_raw(in_shape.clone(), g.data().to_vec())).collect(),
                vec![],
            ),
        };
        grads = next;
        per_layer.push(params);
    }
    per_layer.reverse();
    Ok(Gradients { buffers: per_layer.into_iter().flatten().collect(), inputs: grads })
}

type SampleGrads = (Vec<f64>, Vec<f64>, Vec<f64>);

fn reduce_params(res: Vec<SampleGrads>, in_shape: &[usize]) -> (Vec<Tensor>, Vec<Vec<f64>>) {
    let mut gw = vec![0.0; res[0].1.len()];
    let mut gb = vec![0.0; res[0].2.len()];
    let mut inputs = Vec::with_capacity(res.len());
    for (gi, w, b) in res {
        gw.iter_mut().zip(&w).for_each(|(a, v)| *a += v);
        gb.iter_mut().zip(&b).for_each(|(a, v)| *a += v);
        inputs.push(Tensor::from_raw(in_shape.to_vec(), gi));
    }
    (inputs, vec![gw, gb])
}

fn bn_backward(b: &BatchNorm, cache: &BnCache, grads: &[Tensor], shape: &[usize]) -> (Vec<Tensor>, Vec<Vec<f64>>) {
    let per = ops::per_channel(shape);
    let m = (per * grads.len()) as f64;
    let mut dgamma = vec![0.0; b.channels];
    let mut dbeta = vec![0.0; b.channels];
    for ch in 0..b.channels {
        for (g, h) in grads.iter().zip(&cache.xhat) {
            let r = ch * per..(ch + 1) * per;
            dbeta[ch] += g.data()[r.clone()].iter().sum::<f64>();
            dgamma[ch] += g.data()[r.clone()].iter().zip(&h[r]).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    let inputs = grads
        .iter()
        .zip(&cache.xhat)
        .map(|(g, h)| {
            let mut d = Vec::with_capacity(g.len());
            for ch in 0..b.channels {
                let k = b.gamma[ch] as f64 * cache.inv_std[ch] / m;
                for i in ch * per..(ch + 1) * per {
                    d.push(k * (m * g.data()[i] - dbeta[ch] - h[i] * dgamma[ch]));
                }
            }
            Tensor::from_raw(shape.to_vec(), d)
        })
        .collect();
    (inputs, vec![dgamma, dbeta])
}

/// Folds the batch statistics of `fwd` into every batch-norm layer's
/// running mean/variance (unbiased variance, `momentum` on the old value).
pub fn update_running_stats(net: &mut NetworkSpec, fwd: &BatchForward) {
    let batch = fwd.batch_size();
    for (k, layer) in net.layers_mut().iter_mut().enumerate() {
        if let (LayerSpec::BatchNorm(b), Some(cache)) = (layer, &fwd.bn[k]) {
            let per = ops::per_channel(fwd.acts[k][0].shape());
            let m = (per * batch) as f64;
            let unbias = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
            for ch in 0..b.channels {
                let rm = b.momentum * b.running_mean[ch] as f64 + (1.0 - b.momentum) * cache.mean[ch];
                let rv = b.momentum * b.running_var[ch] as f64 + (1.0 - b.momentum) * cache.var[ch] * unbias;
                b.running_mean[ch] = rm as f32;
                b.running_var[ch] = rv as f32;
            }
        }
    }
}
