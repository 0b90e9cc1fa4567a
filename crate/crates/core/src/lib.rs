//! Lexical-stress classification on magnitude spectrograms, and the tooling
//! to explain what the classifier looks at.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: audio/alignment ingest, fixed-width word windows, word-type
//!   disjoint splits and a synthetic disyllable generator.
//! - [`dsp`]: STFT magnitude spectrograms, z-scoring, low-pass and noise
//!   augmentation, vowel ratio statistics with bootstrap intervals.
//! - [`nn`]: a small CNN layer stack whose forward pass caches every layer
//!   input, batch-norm folding and a binary weight format.
//! - [`train`]: focal loss, Adam and the mini-batch training loop.
//! - [`lrp`]: layer-wise relevance propagation (z, epsilon, alpha-beta, flat
//!   and composite rules).
//! - [`analysis`]: region overlap ratios, feature-specific heatmaps,
//!   permutation-tested correlation and residual band distribution.
//! - [`pipeline`]: glue used by the command-line tool and the acceptance
//!   suite.
//!
//! Spectrograms and relevance maps share one coordinate system: rows are
//! frequency bins, columns are frames, stored row-major.

pub mod analysis;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod export;
pub mod lrp;
pub mod nn;
pub mod pipeline;
pub mod train;
mod par;

pub use error::{Error, ErrorKind, Result};

/// Sample rate every model input is computed at.
pub const SAMPLE_RATE: u32 = 16_000;
/// Word window length in seconds.
pub const WORD_WINDOW_S: f64 = 0.5;
