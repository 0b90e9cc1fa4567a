//! Layer-wise relevance propagation over a [`ForwardTrace`].
//!
//! Conv, dense and average-pool layers are linear maps `z = W x + b`; every
//! rule is expressed through the forward map and its transpose under a
//! transformed weight set, so `R_i = x_i * (W^T s)_i` with `s_j = R_j / Z_j`.

mod composite;
mod rules;

pub use composite::composite_assignment;
pub use rules::{LayerRule, Rule, RuleConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::{self, Chw, WeightMap};
use crate::nn::{ForwardTrace, LayerSpec, Tensor, TraceStep};

/// Relevance over the network input (`[channels, bins, frames]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceMap {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl RelevanceMap {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let t = Tensor::new(shape, values)?;
        Ok(Self::from_tensor(t))
    }

    pub(crate) fn from_tensor(t: Tensor) -> Self {
        let shape = t.shape().to_vec();
        Self { shape, values: t.into_data() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rows of the time-frequency grid (second to last axis).
    pub fn n_bins(&self) -> usize {
        self.shape[self.shape.len().saturating_sub(2)]
    }

    /// Columns of the time-frequency grid (last axis).
    pub fn n_frames(&self) -> usize {
        *self.shape.last().unwrap_or(&0)
    }

    /// Relevance at `(bin, frame)`, summed over channels.
    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        let plane = self.n_bins() * self.n_frames();
        let idx = bin * self.n_frames() + frame;
        self.values.chunks(plane).map(|c| c[idx]).sum()
    }

    /// Channel-summed `bins x frames` grid, row-major.
    pub fn grid(&self) -> Vec<f64> {
        let plane = self.n_bins() * self.n_frames();
        let mut out = vec![0.0; plane];
        for c in self.values.chunks(plane) {
            out.iter_mut().zip(c).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Input relevance for `target` under `rules`.
pub fn relevance(trace: &ForwardTrace<'_>, target: usize, rules: &RuleConfig) -> Result<RelevanceMap> {
    let layers = relevance_layers(trace, target, rules)?;
    let input = layers.into_iter().next().expect("input relevance");
    Ok(RelevanceMap::from_tensor(input))
}

/// Relevance at every activation: entry `k` is shaped like the input of
/// layer `k`, the last entry like the logits.
pub fn relevance_layers(trace: &ForwardTrace<'_>, target: usize, rules: &RuleConfig) -> Result<Vec<Tensor>> {
    let net = trace.net();
    if target >= net.n_classes() {
        return Err(Error::Range(format!("target class {target} for a {}-class network", net.n_classes())));
    }
    if let Some(k) = net.layers().iter().position(|l| matches!(l, LayerSpec::BatchNorm(_))) {
        return Err(Error::Canonization(format!("layer {k} is an unfolded batch norm; fold it into the preceding layer first")));
    }
    let per_layer = rules.resolve(net)?;
    let logits = trace.logits();
    let mut r = Tensor::zeros(logits.shape().to_vec());
    r.data_mut()[target] = logits.data()[target];
    let mut out = vec![r.clone()];
    for step in trace.steps().rev() {
        r = propagate(&step, &r, per_layer[step.index])?;
        if let Some(i) = r.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite relevance at layer {}, unit {i}", step.index)));
        }
        out.push(r.clone());
    }
    out.reverse();
    Ok(out)
}

/// One linear layer seen through a weight transform.
struct Linear<'a> {
    layer: &'a LayerSpec,
    dims: Option<Chw>,
}

impl Linear<'_> {
    fn forward(&self, x: &[f64], map: WeightMap) -> Vec<f64> {
        match self.layer {
            LayerSpec::Conv2d(c) => ops::conv_forward(c, x, self.dims.expect("chw"), map, false),
            LayerSpec::Dense(d) => ops::dense_forward(d, x, map, false),
            LayerSpec::AvgPool(p) => ops::avg_pool_forward(p, x, self.dims.expect("chw"), map),
            _ => unreachable!("not a linear layer"),
        }
    }

    fn transpose(&self, s: &[f64], map: WeightMap) -> Vec<f64> {
        match self.layer {
            LayerSpec::Conv2d(c) => ops::conv_transpose(c, s, self.dims.expect("chw"), map),
            LayerSpec::Dense(d) => ops::dense_transpose(d, s, map),
            LayerSpec::AvgPool(p) => ops::avg_pool_transpose(p, s, self.dims.expect("chw"), map),
            _ => unreachable!("not a linear layer"),
        }
    }

    /// Bias broadcast to the output shape (zero for pooling).
    fn bias(&self, out_len: usize) -> Vec<f64> {
        match self.layer {
            LayerSpec::Conv2d(c) => {
                let per = out_len / c.out_channels;
                c.bias.iter().flat_map(|&b| std::iter::repeat(b as f64).take(per)).collect()
            }
            LayerSpec::Dense(d) => d.bias.iter().map(|&b| b as f64).collect(),
            _ => vec![0.0; out_len],
        }
    }
}

fn propagate(step: &TraceStep<'_>, r_out: &Tensor, rule: LayerRule) -> Result<Tensor> {
    let in_shape = step.input.shape().to_vec();
    let x = step.input.data();
    let r = r_out.data();
    let data = match step.layer {
        LayerSpec::Relu | LayerSpec::Flatten => r.to_vec(),
        LayerSpec::MaxPool(p) => {
            let (_, arg) = ops::max_pool_forward(p, x, Chw::of(&in_shape));
            ops::max_pool_route(r, &arg, x.len())
        }
        LayerSpec::BatchNorm(_) => {
            return Err(Error::Canonization(format!("layer {} is an unfolded batch norm", step.index)));
        }
        LayerSpec::Conv2d(_) | LayerSpec::Dense(_) | LayerSpec::AvgPool(_) => {
            let dims = (in_shape.len() == 3).then(|| Chw::of(&in_shape));
            let lin = Linear { layer: step.layer, dims };
            linear_rule(&lin, x, r, rule, step.index)?
        }
    };
    Ok(Tensor::from_raw(in_shape, data))
}

fn divide(r: &[f64], z: &[f64], scale: f64) -> Vec<f64> {
    r.iter().zip(z).map(|(&r, &z)| if z == 0.0 { 0.0 } else { scale * r / z }).collect()
}

fn linear_rule(lin: &Linear<'_>, x: &[f64], r: &[f64], rule: LayerRule, layer: usize) -> Result<Vec<f64>> {
    let bias = lin.bias(r.len());
    let with_bias = |mut z: Vec<f64>, keep: fn(f64) -> f64| {
        z.iter_mut().zip(&bias).for_each(|(z, &b)| *z += keep(b));
        z
    };
    let times_x = |c: Vec<f64>| c.into_iter().zip(x).map(|(c, &x)| c * x).collect::<Vec<_>>();
    match rule {
        LayerRule::Z => {
            let z = with_bias(lin.forward(x, WeightMap::Original), |b| b);
            if let Some(unit) = z.iter().zip(r).position(|(&z, &r)| z == 0.0 && r != 0.0) {
                return Err(Error::Singularity { layer, unit });
            }
            Ok(times_x(lin.transpose(&divide(r, &z, 1.0), WeightMap::Original)))
        }
        LayerRule::Epsilon(eps) => {
            let z = with_bias(lin.forward(x, WeightMap::Original), |b| b);
            let s: Vec<f64> = z.iter().zip(r).map(|(&z, &r)| r / (z + if z >= 0.0 { eps } else { -eps })).collect();
            Ok(times_x(lin.transpose(&s, WeightMap::Original)))
        }
        LayerRule::AlphaBeta { alpha, beta } => {
            // Z+_ij = max(w_ij x_i, 0) splits into w+ x+ and w- x-; Z- likewise.
            let xp: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
            let xn: Vec<f64> = x.iter().map(|v| v.min(0.0)).collect();
            let add = |a: Vec<f64>, b: Vec<f64>| a.into_iter().zip(b).map(|(a, b)| a + b).collect::<Vec<_>>();
            let zp = with_bias(add(lin.forward(&xp, WeightMap::Positive), lin.forward(&xn, WeightMap::Negative)), |b| b.max(0.0));
            let zn = with_bias(add(lin.forward(&xn, WeightMap::Positive), lin.forward(&xp, WeightMap::Negative)), |b| b.min(0.0));
            let sp = divide(r, &zp, alpha);
            let sn = divide(r, &zn, beta);
            let mut out = vec![0.0; x.len()];
            let parts = [
                (&sp, WeightMap::Positive, &xp),
                (&sp, WeightMap::Negative, &xn),
                (&sn, WeightMap::Positive, &xn),
                (&sn, WeightMap::Negative, &xp),
            ];
            for (s, map, xs) in parts {
                if s.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let c = lin.transpose(s, map);
                out.iter_mut().zip(c.iter().zip(xs.iter())).for_each(|(o, (c, x))| *o += c * x);
            }
            Ok(out)
        }
        LayerRule::Flat => {
            let ones = vec![1.0; x.len()];
            let z = lin.forward(&ones, WeightMap::Support);
            Ok(lin.transpose(&divide(r, &z, 1.0), WeightMap::Support))
        }
        LayerRule::PassThrough => Err(Error::Assignment(format!("layer {layer} is linear but was assigned pass-through"))),
    }
}
