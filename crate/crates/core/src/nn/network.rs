use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::ops::{self, Chw, WeightMap};
use super::Tensor;
use crate::error::{Error, Result};

/// An ordered CNN layer stack with validated shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    n_classes: usize,
}

impl NetworkSpec {
    /// Validates that layer shapes compose, parameter buffers have the
    /// right lengths and the last layer emits `n_classes` logits.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, n_classes: usize) -> Result<Self> {
        let net = Self { input_shape, layers, n_classes };
        net.check()?;
        Ok(net)
    }

    fn check(&self) -> Result<()> {
        let shapes = self.activation_shapes()?;
        let last = shapes.last().expect("at least the input shape");
        if last != &[self.n_classes] {
            return Err(Error::shape("output", format!("network emits {last:?}, expected [{}]", self.n_classes)));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            for (buf, want) in layer.params().iter().zip(layer.param_lens()) {
                if buf.len() != want {
                    return Err(Error::shape(
                        format!("{i} ({})", layer.kind_name()),
                        format!("parameter buffer has {} values, expected {want}", buf.len()),
                    ));
                }
                if buf.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
                }
            }
        }
        Ok(())
    }

    /// Shapes of every activation: the input followed by each layer output.
    pub fn activation_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes = vec![self.input_shape.clone()];
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer.output_shape(shapes.last().expect("non-empty"), i)?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|p| p.len()).sum()
    }

    /// Trainable parameter buffers, in a fixed order shared with the
    /// gradients produced by backpropagation.
    pub(crate) fn trainable_mut(&mut self) -> Vec<&mut Vec<f32>> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let n = l.trainable_count();
                l.params_mut().into_iter().take(n)
            })
            .collect()
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [LayerSpec] {
        &mut self.layers
    }

    /// Fresh weights from a seeded scaled-uniform initialization.
    pub fn initialized(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut self.layers {
            l.init(&mut rng);
        }
        self
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardTrace<'_>)> {
        forward(self, input)
    }

    /// Inference without keeping intermediate activations.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = apply_inference(layer, &x);
        }
        Ok(x)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(Error::shape(
                "input",
                format!("expected {:?}, got {:?}", self.input_shape, input.shape()),
            ));
        }
        Ok(())
    }
}

/// Inference-mode output of a single layer (batch norm uses running
/// statistics). Shapes must already be validated.
pub(crate) fn apply_inference(layer: &LayerSpec, x: &Tensor) -> Tensor {
    let shape = x.shape();
    let out_shape = layer.output_shape(shape, 0).expect("validated network");
    let data = match layer {
        LayerSpec::Conv2d(c) => ops::conv_forward(c, x.data(), Chw::of(shape), WeightMap::Original, true),
        LayerSpec::Dense(d) => ops::dense_forward(d, x.data(), WeightMap::Original, true),
        LayerSpec::Relu => x.data().iter().map(|v| v.max(0.0)).collect(),
        LayerSpec::AvgPool(p) => ops::avg_pool_forward(p, x.data(), Chw::of(shape), WeightMap::Original),
        LayerSpec::MaxPool(p) => ops::max_pool_forward(p, x.data(), Chw::of(shape)).0,
        LayerSpec::BatchNorm(b) => ops::batch_norm_inference(b, x.data(), shape),
        LayerSpec::Flatten => x.data().to_vec(),
    };
    Tensor::from_raw(out_shape, data)
}

/// Activations cached by [`forward`]: `activations[k]` is the input of
/// layer `k` and `activations[k + 1]` its output.
#[derive(Debug, Clone)]
pub struct ForwardTrace<'a> {
    net: &'a NetworkSpec,
    activations: Vec<Tensor>,
}

/// One layer's view of a trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceStep<'t> {
    pub index: usize,
    pub layer: &'t LayerSpec,
    pub input: &'t Tensor,
    pub output: &'t Tensor,
}

impl<'a> ForwardTrace<'a> {
    pub fn net(&self) -> &'a NetworkSpec {
        self.net
    }

    pub fn len(&self) -> usize {
        self.net.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.layers.is_empty()
    }

    pub fn step(&self, k: usize) -> TraceStep<'_> {
        TraceStep {
            index: k,
            layer: &self.net.layers[k],
            input: &self.activations[k],
            output: &self.activations[k + 1],
        }
    }

    pub fn steps(&self) -> impl DoubleEndedIterator<Item = TraceStep<'_>> + '_ {
        (0..self.len()).map(move |k| self.step(k))
    }

    pub fn input(&self) -> &Tensor {
        &self.activations[0]
    }

    pub fn logits(&self) -> &Tensor {
        self.activations.last().expect("non-empty")
    }
}

/// Deterministic inference pass caching every layer input and output.
pub fn forward<'a>(net: &'a NetworkSpec, input: &Tensor) -> Result<(Tensor, ForwardTrace<'a>)> {
    net.check_input(input)?;
    let mut activations = Vec::with_capacity(net.layers.len() + 1);
    activations.push(input.clone());
    for layer in &net.layers {
        let next = apply_inference(layer, activations.last().expect("non-empty"));
        activations.push(next);
    }
    let logits = activations.last().expect("non-empty").clone();
    Ok((logits, ForwardTrace { net, activations }))
}
