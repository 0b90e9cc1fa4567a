//! Signal processing: spectrogram front end, augmentation, and the vowel
//! amplitude/duration statistics used to sanity-check a corpus.

mod filter;
mod mix;
mod spectrogram;
mod stats;

pub use filter::{design_lowpass, lowpass, LOWPASS_TAPS};
pub use mix::{mix_at_snr, mix_at_snr_detailed, NoiseMix};
pub use spectrogram::{stft_magnitude, zscore, FrameGeometry, Spectrogram};
pub use stats::{bootstrap_mean_diff, vowel_ratio_stats, BootstrapCI, GroupStats, RatioStats, VowelRatio};

/// Default analysis window, seconds.
pub const WINDOW_S: f64 = 0.02;
/// Default hop, seconds.
pub const HOP_S: f64 = 0.01;
