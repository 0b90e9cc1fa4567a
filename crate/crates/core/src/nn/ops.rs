//! Raw kernels over flat row-major buffers.
//!
//! Linear layers (conv, dense, average pooling) expose a forward map and its
//! transpose under a [`WeightMap`], which is all both backpropagation and the
//! relevance rules need.

use super::layer::{BatchNorm, Conv2d, Dense, Pool};

/// Elementwise transform applied to a linear layer's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WeightMap {
    Original,
    /// `max(w, 0)`
    Positive,
    /// `min(w, 0)`
    Negative,
    /// `1` where `w != 0`, else `0`
    Support,
}

impl WeightMap {
    #[inline]
    pub(crate) fn apply(self, w: f64) -> f64 {
        match self {
            WeightMap::Original => w,
            WeightMap::Positive => w.max(0.0),
            WeightMap::Negative => w.min(0.0),
            WeightMap::Support => {
                if w != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn weights(self, w: &[f32]) -> Vec<f64> {
        w.iter().map(|&v| self.apply(v as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Chw {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Chw {
    pub(crate) fn of(shape: &[usize]) -> Self {
        Self { c: shape[0], h: shape[1], w: shape[2] }
    }
}

fn conv_out(c: &Conv2d, x: Chw) -> (usize, usize, usize, usize) {
    let hp = x.h + 2 * c.padding[0];
    let wp = x.w + 2 * c.padding[1];
    let oh = (hp - c.kernel[0]) / c.stride + 1;
    let ow = (wp - c.kernel[1]) / c.stride + 1;
    (hp, wp, oh, ow)
}

fn pad(x: &[f64], dims: Chw, ph: usize, pw: usize) -> Vec<f64> {
    if ph == 0 && pw == 0 {
        return x.to_vec();
    }
    let (hp, wp) = (dims.h + 2 * ph, dims.w + 2 * pw);
    let mut out = vec![0.0; dims.c * hp * wp];
    for ch in 0..dims.c {
        for y in 0..dims.h {
            let src = &x[(ch * dims.h + y) * dims.w..][..dims.w];
            out[(ch * hp + y + ph) * wp + pw..][..dims.w].copy_from_slice(src);
        }
    }
    out
}

pub(crate) fn conv_forward(c: &Conv2d, x: &[f64], dims: Chw, map: WeightMap, with_bias: bool) -> Vec<f64> {
    let (hp, wp, oh, ow) = conv_out(c, dims);
    let xp = pad(x, dims, c.padding[0], c.padding[1]);
    let w = map.weights(&c.weights);
    let [kh, kw] = c.kernel;
    let s = c.stride;
    let mut out = vec![0.0; c.out_channels * oh * ow];
    for oc in 0..c.out_channels {
        let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
        if with_bias {
            plane.iter_mut().for_each(|v| *v = c.bias[oc] as f64);
        }
        for ic in 0..c.in_channels {
            for ky in 0..kh {
                for kx in 0..kw {
                    let wv = w[((oc * c.in_channels + ic) * kh + ky) * kw + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let row = &xp[(ic * hp + oy * s + ky) * wp + kx..];
                        let orow = &mut plane[oy * ow..(oy + 1) * ow];
                        if s == 1 {
                            for (o, &v) in orow.iter_mut().zip(&row[..ow]) {
                                *o += wv * v;
                            }
                        } else {
                            for (ox, o) in orow.iter_mut().enumerate() {
                                *o += wv * row[ox * s];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Transpose of the (bias-free) convolution: maps output-shaped `g` back to
/// the input shape.
pub(crate) fn conv_transpose(c: &Conv2d, g: &[f64], dims: Chw, map: WeightMap) -> Vec<f64> {
    let (hp, wp, oh, ow) = conv_out(c, dims);
    let w = map.weights(&c.weights);
    let [kh, kw] = c.kernel;
    let s = c.stride;
    let mut gp = vec![0.0; c.in_channels * hp * wp];
    for oc in 0..c.out_channels {
        let plane = &g[oc * oh * ow..(oc + 1) * oh * ow];
        for ic in 0..c.in_channels {
            for ky in 0..kh {
                for kx in 0..kw {
                    let wv = w[((oc * c.in_channels + ic) * kh + ky) * kw + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let grow = &plane[oy * ow..(oy + 1) * ow];
                        let prow = &mut gp[(ic * hp + oy * s + ky) * wp + kx..];
                        if s == 1 {
                            for (p, &v) in prow[..ow].iter_mut().zip(grow) {
                                *p += wv * v;
                            }
                        } else {
                            for (ox, &v) in grow.iter().enumerate() {
                                prow[ox * s] += wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
    let (ph, pw) = (c.padding[0], c.padding[1]);
    if ph == 0 && pw == 0 {
        return gp;
    }
    let mut out = vec![0.0; dims.c * dims.h * dims.w];
    for ch in 0..dims.c {
        for y in 0..dims.h {
            out[(ch * dims.h + y) * dims.w..][..dims.w].copy_from_slice(&gp[(ch * hp + y + ph) * wp + pw..][..dims.w]);
        }
    }
    out
}

/// Weight and bias gradients of a convolution for upstream gradient `g`.
pub(crate) fn conv_param_grads(c: &Conv2d, x: &[f64], dims: Chw, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (hp, wp, oh, ow) = conv_out(c, dims);
    let xp = pad(x, dims, c.padding[0], c.padding[1]);
    let [kh, kw] = c.kernel;
    let s = c.stride;
    let mut gw = vec![0.0; c.weight_len()];
    let mut gb = vec![0.0; c.out_channels];
    for oc in 0..c.out_channels {
        let plane = &g[oc * oh * ow..(oc + 1) * oh * ow];
        gb[oc] = plane.iter().sum();
        for ic in 0..c.in_channels {
            for ky in 0..kh {
                for kx in 0..kw {
                    let mut acc = 0.0;
                    for oy in 0..oh {
                        let grow = &plane[oy * ow..(oy + 1) * ow];
                        let row = &xp[(ic * hp + oy * s + ky) * wp + kx..];
                        if s == 1 {
                            acc += grow.iter().zip(&row[..ow]).map(|(a, b)| a * b).sum::<f64>();
                        } else {
                            acc += grow.iter().enumerate().map(|(ox, a)| a * row[ox * s]).sum::<f64>();
                        }
                    }
                    gw[((oc * c.in_channels + ic) * kh + ky) * kw + kx] = acc;
                }
            }
        }
    }
    (gw, gb)
}

pub(crate) fn dense_forward(d: &Dense, x: &[f64], map: WeightMap, with_bias: bool) -> Vec<f64> {
    (0..d.out_features)
        .map(|j| {
            let row = &d.weights[j * d.in_features..(j + 1) * d.in_features];
            let b = if with_bias { d.bias[j] as f64 } else { 0.0 };
            b + row.iter().zip(x).map(|(&w, &v)| map.apply(w as f64) * v).sum::<f64>()
        })
        .collect()
}

pub(crate) fn dense_transpose(d: &Dense, g: &[f64], map: WeightMap) -> Vec<f64> {
    let mut out = vec![0.0; d.in_features];
    for (j, &gj) in g.iter().enumerate() {
        if gj == 0.0 {
            continue;
        }
        let row = &d.weights[j * d.in_features..(j + 1) * d.in_features];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += map.apply(w as f64) * gj;
        }
    }
    out
}

pub(crate) fn dense_param_grads(d: &Dense, x: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gw = vec![0.0; d.in_features * d.out_features];
    for (j, &gj) in g.iter().enumerate() {
        for (o, &v) in gw[j * d.in_features..(j + 1) * d.in_features].iter_mut().zip(x) {
            *o = gj * v;
        }
    }
    (gw, g.to_vec())
}

fn pool_out(p: &Pool, dims: Chw) -> (usize, usize) {
    ((dims.h - p.window[0]) / p.stride[0] + 1, (dims.w - p.window[1]) / p.stride[1] + 1)
}

/// Average pooling viewed as a depthwise linear map with weight
/// `1 / window_area`.
pub(crate) fn avg_pool_forward(p: &Pool, x: &[f64], dims: Chw, map: WeightMap) -> Vec<f64> {
    let (oh, ow) = pool_out(p, dims);
    let wv = map.apply(1.0 / (p.window[0] * p.window[1]) as f64);
    let mut out = vec![0.0; dims.c * oh * ow];
    for ch in 0..dims.c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
                for ky in 0..p.window[0] {
                    let row = &x[(ch * dims.h + oy * p.stride[0] + ky) * dims.w + ox * p.stride[1]..];
                    acc += row[..p.window[1]].iter().sum::<f64>();
                }
                out[(ch * oh + oy) * ow + ox] = wv * acc;
            }
        }
    }
    out
}

pub(crate) fn avg_pool_transpose(p: &Pool, g: &[f64], dims: Chw, map: WeightMap) -> Vec<f64> {
    let (oh, ow) = pool_out(p, dims);
    let wv = map.apply(1.0 / (p.window[0] * p.window[1]) as f64);
    let mut out = vec![0.0; dims.c * dims.h * dims.w];
    for ch in 0..dims.c {
        for oy in 0..oh {
            for ox in 0..ow {
                let v = wv * g[(ch * oh + oy) * ow + ox];
                for ky in 0..p.window[0] {
                    let row = &mut out[(ch * dims.h + oy * p.stride[0] + ky) * dims.w + ox * p.stride[1]..];
                    row[..p.window[1]].iter_mut().for_each(|o| *o += v);
                }
            }
        }
    }
    out
}

/// Max pooling; also returns the flat input index of each window's first
/// maximum.
pub(crate) fn max_pool_forward(p: &Pool, x: &[f64], dims: Chw) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = pool_out(p, dims);
    let mut out = vec![0.0; dims.c * oh * ow];
    let mut arg = vec![0; dims.c * oh * ow];
    for ch in 0..dims.c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0;
                for ky in 0..p.window[0] {
                    for kx in 0..p.window[1] {
                        let i = (ch * dims.h + oy * p.stride[0] + ky) * dims.w + ox * p.stride[1] + kx;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                let o = (ch * oh + oy) * ow + ox;
                out[o] = best;
                arg[o] = best_i;
            }
        }
    }
    (out, arg)
}

pub(crate) fn max_pool_route(g: &[f64], argmax: &[usize], in_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; in_len];
    for (&gi, &i) in g.iter().zip(argmax) {
        out[i] += gi;
    }
    out
}

/// Spatial positions per channel for a `[C, ...]` shape.
pub(crate) fn per_channel(shape: &[usize]) -> usize {
    shape[1..].iter().product::<usize>().max(1)
}

pub(crate) fn batch_norm_inference(b: &BatchNorm, x: &[f64], shape: &[usize]) -> Vec<f64> {
    let m = per_channel(shape);
    let mut out = Vec::with_capacity(x.len());
    for ch in 0..b.channels {
        let scale = b.gamma[ch] as f64 / (b.running_var[ch] as f64 + b.eps).sqrt();
        let shift = b.beta[ch] as f64 - b.running_mean[ch] as f64 * scale;
        out.extend(x[ch * m..(ch + 1) * m].iter().map(|v| v * scale + shift));
    }
    out
}
