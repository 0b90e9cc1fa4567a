//! Minimal CNN layer stack.
//!
//! Activations are `[channels, height, width]` tensors (height = frequency
//! bins, width = frames) until a flatten layer turns them into vectors.
//! Parameters are stored as `f32`; all arithmetic runs in `f64`.

pub mod arch;
mod backprop;
mod fold;
mod gradcheck;
mod io;
mod layer;
mod network;
pub(crate) mod ops;
mod tensor;

pub use arch::{build, Architecture};
pub use backprop::{backward, forward_train, update_running_stats, BatchForward, Gradients};
pub use fold::fold_batchnorm;
pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{decode_weights, encode_weights, load_weights, save_weights, FORMAT_VERSION, MAGIC};
pub use layer::{BatchNorm, Conv2d, Dense, LayerSpec, Pool};
pub use network::{forward, ForwardTrace, NetworkSpec, TraceStep};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
