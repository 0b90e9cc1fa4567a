//! Named architectures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::layer::{BatchNorm, Conv2d, Dense, LayerSpec, Pool};
use super::NetworkSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Three valid 5x5 convolutions with average pooling between them and
    /// two dense layers.
    #[serde(rename = "lenet5")]
    LeNet5,
    /// Four same-padded 3x3 convolutions with max pooling, three dense layers.
    VggMini,
    Vgg11,
    Vgg16,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::LeNet5 => "lenet5",
            Architecture::VggMini => "vgg-mini",
            Architecture::Vgg11 => "vgg11",
            Architecture::Vgg16 => "vgg16",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lenet5" | "lenet-5" | "lenet" => Ok(Architecture::LeNet5),
            "vgg-mini" | "vggmini" | "vgg_mini" => Ok(Architecture::VggMini),
            "vgg11" => Ok(Architecture::Vgg11),
            "vgg16" => Ok(Architecture::Vgg16),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Builds and initializes `arch` for a `[channels, bins, frames]` input.
pub fn build(arch: Architecture, input_shape: &[usize], seed: u64) -> Result<NetworkSpec> {
    let net = match arch {
        Architecture::LeNet5 => lenet5(input_shape, [4, 8, 16], 32)?,
        Architecture::VggMini => vgg(input_shape, &[Conv(8), MaxPool, Conv(16), MaxPool, Conv(16), MaxPool, Conv(32), MaxPool], [64, 32])?,
        Architecture::Vgg11 => vgg(input_shape, &vgg_config(&[1, 1, 2, 2, 2]), [4096, 4096])?,
        Architecture::Vgg16 => vgg(input_shape, &vgg_config(&[2, 2, 3, 3, 3]), [4096, 4096])?,
    };
    Ok(net.initialized(seed))
}

fn conv_block(layers: &mut Vec<LayerSpec>, conv: Conv2d) {
    let ch = conv.out_channels;
    layers.push(LayerSpec::Conv2d(conv));
    layers.push(LayerSpec::BatchNorm(BatchNorm::new(ch)));
    layers.push(LayerSpec::Relu);
}

fn flat_size(input_shape: &[usize], layers: &[LayerSpec]) -> Result<usize> {
    let mut shape = input_shape.to_vec();
    for (i, l) in layers.iter().enumerate() {
        shape = l.output_shape(&shape, i)?;
    }
    Ok(shape.iter().product())
}

/// LeNet-style stack with the given conv widths and hidden dense width.
pub fn lenet5(input_shape: &[usize], widths: [usize; 3], hidden: usize) -> Result<NetworkSpec> {
    let in_ch = *input_shape.first().ok_or_else(|| Error::Config("empty input shape".into()))?;
    let mut layers = Vec::new();
    conv_block(&mut layers, Conv2d::valid(in_ch, widths[0], 5));
    layers.push(LayerSpec::AvgPool(Pool::square(2)));
    conv_block(&mut layers, Conv2d::valid(widths[0], widths[1], 5));
    layers.push(LayerSpec::AvgPool(Pool::square(2)));
    conv_block(&mut layers, Conv2d::valid(widths[1], widths[2], 5));
    layers.push(LayerSpec::Flatten);
    let flat = flat_size(input_shape, &layers)?;
    layers.push(LayerSpec::Dense(Dense::new(flat, hidden)));
    layers.push(LayerSpec::Relu);
    layers.push(LayerSpec::Dense(Dense::new(hidden, 2)));
    NetworkSpec::new(input_shape.to_vec(), layers, 2)
}

/// One entry of a VGG feature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VggItem {
    /// Same-padded 3x3 convolution with this many output channels.
    Conv(usize),
    MaxPool,
}

use VggItem::{Conv, MaxPool};

/// Standard VGG feature configuration from per-stage conv counts, with
/// widths 64, 128, 256, 512, 512.
pub fn vgg_config(convs_per_stage: &[usize]) -> Vec<VggItem> {
    let widths = [64, 128, 256, 512, 512];
    let mut cfg = Vec::new();
    for (stage, &n) in convs_per_stage.iter().enumerate() {
        cfg.extend(std::iter::repeat(Conv(widths[stage.min(4)])).take(n));
        cfg.push(MaxPool);
    }
    cfg
}

/// VGG-style network: conv/BN/ReLU blocks and 2x2 max pooling, then two
/// hidden dense layers and the output layer.
pub fn vgg(input_shape: &[usize], cfg: &[VggItem], hidden: [usize; 2]) -> Result<NetworkSpec> {
    let mut ch = *input_shape.first().ok_or_else(|| Error::Config("empty input shape".into()))?;
    let mut layers = Vec::new();
    for item in cfg {
        match *item {
            Conv(out) => {
                conv_block(&mut layers, Conv2d::same(ch, out, 3));
                ch = out;
            }
            MaxPool => layers.push(LayerSpec::MaxPool(Pool::square(2))),
        }
    }
    layers.push(LayerSpec::Flatten);
    let flat = flat_size(input_shape, &layers)?;
    layers.push(LayerSpec::Dense(Dense::new(flat, hidden[0])));
    layers.push(LayerSpec::Relu);
    layers.push(LayerSpec::Dense(Dense::new(hidden[0], hidden[1])));
    layers.push(LayerSpec::Relu);
    layers.push(LayerSpec::Dense(Dense::new(hidden[1], 2)));
    NetworkSpec::new(input_shape.to_vec(), layers, 2)
}
