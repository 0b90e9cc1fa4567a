use super::{Alignment, AudioClip};
use crate::error::{Error, Result};

/// Cuts a `window_s`-long clip starting at the word onset, zero-padding when
/// the source ends early.
pub fn extract_word_window(clip: &AudioClip, alignment: &Alignment, window_s: f64) -> Result<AudioClip> {
    if !(window_s > 0.0) {
        return Err(Error::Config(format!("window length must be positive, got {window_s}")));
    }
    let sr = clip.sample_rate() as f64;
    let n = (window_s * sr).round() as usize;
    if n == 0 {
        return Err(Error::Config(format!("window of {window_s} s is shorter than one sample")));
    }
    let start_s = alignment.word_start;
    if !(start_s >= 0.0) {
        return Err(Error::Range(format!("word start {start_s} s is negative")));
    }
    let start = (start_s * sr).round() as usize;
    if start >= clip.len() {
        return Err(Error::Range(format!(
            "word start {start_s} s is beyond the end of a {:.3} s clip",
            clip.duration_s()
        )));
    }
    let src = &clip.samples()[start..];
    let mut out = vec![0.0; n];
    let m = src.len().min(n);
    out[..m].copy_from_slice(&src[..m]);
    AudioClip::new(out, clip.sample_rate())
}
