use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D convolution over `[channels, height, width]` inputs.
///
/// Weights are `[out][in][kh][kw]`, stored as `f32` to match the weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub stride: usize,
    /// Zero padding added on each side of height and width.
    pub padding: [usize; 2],
    #[serde(skip)]
    pub weights: Vec<f32>,
    #[serde(skip)]
    pub bias: Vec<f32>,
}

impl Conv2d {
    /// Unpadded convolution; weights zeroed until initialized or loaded.
    pub fn valid(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self::with_padding(in_channels, out_channels, kernel, 0)
    }

    /// Stride-1 convolution padded to keep height and width (odd kernels).
    pub fn same(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self::with_padding(in_channels, out_channels, kernel, kernel / 2)
    }

    fn with_padding(in_channels: usize, out_channels: usize, kernel: usize, pad: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel: [kernel, kernel],
            stride: 1,
            padding: [pad, pad],
            weights: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel[0] * self.kernel[1]
    }

    pub(crate) fn weight_len(&self) -> usize {
        self.out_channels * self.fan_in()
    }
}

/// Fully connected layer, weights `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    #[serde(skip)]
    pub weights: Vec<f32>,
    #[serde(skip)]
    pub bias: Vec<f32>,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features,
            out_features,
            weights: vec![0.0; in_features * out_features],
            bias: vec![0.0; out_features],
        }
    }
}

/// Pooling window; windows that do not fit are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub window: [usize; 2],
    pub stride: [usize; 2],
}

impl Pool {
    pub fn square(size: usize) -> Self {
        Self { window: [size, size], stride: [size, size] }
    }
}

/// Per-channel (or per-feature) batch normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub channels: usize,
    pub eps: f64,
    /// Weight of the old running statistic in each training update.
    pub momentum: f64,
    #[serde(skip)]
    pub gamma: Vec<f32>,
    #[serde(skip)]
    pub beta: Vec<f32>,
    #[serde(skip)]
    pub running_mean: Vec<f32>,
    #[serde(skip)]
    pub running_var: Vec<f32>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            eps: 1e-5,
            momentum: 0.9,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d(Conv2d),
    Dense(Dense),
    Relu,
    AvgPool(Pool),
    MaxPool(Pool),
    BatchNorm(BatchNorm),
    Flatten,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d(_) => "conv2d",
            LayerSpec::Dense(_) => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::AvgPool(_) => "avg_pool",
            LayerSpec::MaxPool(_) => "max_pool",
            LayerSpec::BatchNorm(_) => "batch_norm",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Conv and dense layers carry weights that LRP rules redistribute over.
    pub fn is_weighted(&self) -> bool {
        matches!(self, LayerSpec::Conv2d(_) | LayerSpec::Dense(_))
    }

    pub fn output_shape(&self, input: &[usize], index: usize) -> Result<Vec<usize>> {
        let name = format!("{index} ({})", self.kind_name());
        let need_chw = |input: &[usize]| -> Result<(usize, usize, usize)> {
            match input {
                [c, h, w] => Ok((*c, *h, *w)),
                _ => Err(Error::shape(&name, format!("expected [channels, height, width], got {input:?}"))),
            }
        };
        match self {
            LayerSpec::Conv2d(c) => {
                let (ch, h, w) = need_chw(input)?;
                if ch != c.in_channels {
                    return Err(Error::shape(&name, format!("expected {} input channels, got {ch}", c.in_channels)));
                }
                if c.stride == 0 {
                    return Err(Error::shape(&name, "stride must be at least 1"));
                }
                let (ph, pw) = (h + 2 * c.padding[0], w + 2 * c.padding[1]);
                if ph < c.kernel[0] || pw < c.kernel[1] {
                    return Err(Error::shape(&name, format!("kernel {:?} larger than padded input {ph}x{pw}", c.kernel)));
                }
                Ok(vec![c.out_channels, (ph - c.kernel[0]) / c.stride + 1, (pw - c.kernel[1]) / c.stride + 1])
            }
            LayerSpec::Dense(d) => match input {
                [n] if *n == d.in_features => Ok(vec![d.out_features]),
                _ => Err(Error::shape(&name, format!("expected [{}], got {input:?}", d.in_features))),
            },
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::AvgPool(p) | LayerSpec::MaxPool(p) => {
                let (ch, h, w) = need_chw(input)?;
                if p.stride.contains(&0) || p.window.contains(&0) {
                    return Err(Error::shape(&name, "pool window and stride must be at least 1"));
                }
                if h < p.window[0] || w < p.window[1] {
                    return Err(Error::shape(&name, format!("pool window {:?} larger than input {h}x{w}", p.window)));
                }
                Ok(vec![ch, (h - p.window[0]) / p.stride[0] + 1, (w - p.window[1]) / p.stride[1] + 1])
            }
            LayerSpec::BatchNorm(b) => {
                if input.first() != Some(&b.channels) {
                    return Err(Error::shape(&name, format!("expected {} channels, got {input:?}", b.channels)));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    /// Parameter buffers in declaration order (the weight file order).
    pub fn params(&self) -> Vec<&[f32]> {
        match self {
            LayerSpec::Conv2d(c) => vec![&c.weights, &c.bias],
            LayerSpec::Dense(d) => vec![&d.weights, &d.bias],
            LayerSpec::BatchNorm(b) => vec![&b.gamma, &b.beta, &b.running_mean, &b.running_var],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f32>> {
        match self {
            LayerSpec::Conv2d(c) => vec![&mut c.weights, &mut c.bias],
            LayerSpec::Dense(d) => vec![&mut d.weights, &mut d.bias],
            LayerSpec::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta, &mut b.running_mean, &mut b.running_var],
            _ => vec![],
        }
    }

    /// Expected lengths of [`LayerSpec::params`].
    pub(crate) fn param_lens(&self) -> Vec<usize> {
        match self {
            LayerSpec::Conv2d(c) => vec![c.weight_len(), c.out_channels],
            LayerSpec::Dense(d) => vec![d.in_features * d.out_features, d.out_features],
            LayerSpec::BatchNorm(b) => vec![b.channels; 4],
            _ => vec![],
        }
    }

    /// Number of leading parameter buffers updated by gradient descent
    /// (batch-norm running statistics are not).
    pub(crate) fn trainable_count(&self) -> usize {
        match self {
            LayerSpec::Conv2d(_) | LayerSpec::Dense(_) | LayerSpec::BatchNorm(_) => 2,
            _ => 0,
        }
    }

    /// Scaled-uniform fan-in initialization, `U(-sqrt(6 / fan_in), +)`, zero bias.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let fill = |w: &mut Vec<f32>, fan_in: usize, rng: &mut R| {
            let limit = (6.0 / fan_in as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.gen_range(-limit..limit) as f32;
            }
        };
        match self {
            LayerSpec::Conv2d(c) => {
                let fan = c.fan_in();
                fill(&mut c.weights, fan, rng);
                c.bias.iter_mut().for_each(|b| *b = 0.0);
            }
            LayerSpec::Dense(d) => {
                fill(&mut d.weights, d.in_features, rng);
                d.bias.iter_mut().for_each(|b| *b = 0.0);
            }
            _ => {}
        }
    }
}
