use super::layer::LayerSpec;
use super::NetworkSpec;
use crate::error::{Error, Result};

/// Merges every batch-norm layer into the conv or dense layer right before
/// it, using the running statistics. The folded network computes the same
/// inference function (up to `f32` rounding of the merged parameters).
pub fn fold_batchnorm(net: &NetworkSpec) -> Result<NetworkSpec> {
    let mut out: Vec<LayerSpec> = Vec::with_capacity(net.layers().len());
    for (k, layer) in net.layers().iter().enumerate() {
        let LayerSpec::BatchNorm(bn) = layer else {
            out.push(layer.clone());
            continue;
        };
        let scale: Vec<f64> = (0..bn.channels)
            .map(|c| bn.gamma[c] as f64 / (bn.running_var[c] as f64 + bn.eps).sqrt())
            .collect();
        let shift = |c: usize, bias: f32| {
            ((bias as f64 - bn.running_mean[c] as f64) * scale[c] + bn.beta[c] as f64) as f32
        };
        match out.last_mut() {
            Some(LayerSpec::Conv2d(conv)) if conv.out_channels == bn.channels => {
                let per = conv.fan_in();
                for c in 0..bn.channels {
                    for w in &mut conv.weights[c * per..(c + 1) * per] {
                        *w = (*w as f64 * scale[c]) as f32;
                    }
                    conv.bias[c] = shift(c, conv.bias[c]);
                }
            }
            Some(LayerSpec::Dense(d)) if d.out_features == bn.channels => {
                let per = d.in_features;
                for c in 0..bn.channels {
                    for w in &mut d.weights[c * per..(c + 1) * per] {
                        *w = (*w as f64 * scale[c]) as f32;
                    }
                    d.bias[c] = shift(c, d.bias[c]);
                }
            }
            Some(prev) => {
                return Err(Error::Canonization(format!(
                    "batch_norm at layer {k} follows {} instead of conv2d or dense",
                    prev.kind_name()
                )))
            }
            None => return Err(Error::Canonization(format!("batch_norm at layer {k} has no preceding layer"))),
        }
    }
    NetworkSpec::new(net.input_shape().to_vec(), out, net.n_classes())
}
