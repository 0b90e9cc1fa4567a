use super::spectrogram::hamming;
use crate::corpus::AudioClip;
use crate::error::{Error, Result};

pub const LOWPASS_TAPS: usize = 101;

/// Hamming-windowed sinc low-pass taps with unit DC gain.
pub fn design_lowpass(cutoff_hz: f64, sample_rate: u32) -> Result<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::Config(format!("cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz")));
    }
    let fc = cutoff_hz / sample_rate as f64;
    let m = (LOWPASS_TAPS - 1) as f64 / 2.0;
    let w = hamming(LOWPASS_TAPS);
    let mut h: Vec<f64> = (0..LOWPASS_TAPS)
        .map(|i| {
            let t = i as f64 - m;
            let sinc = if t == 0.0 { 2.0 * fc } else { (2.0 * std::f64::consts::PI * fc * t).sin() / (std::f64::consts::PI * t) };
            sinc * w[i]
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    Ok(h)
}

/// Linear-phase FIR low-pass, centered so the output has the input's length
/// and timing. The result is clamped into `[-1, 1]`.
pub fn lowpass(clip: &AudioClip, cutoff_hz: f64) -> Result<AudioClip> {
    let h = design_lowpass(cutoff_hz, clip.sample_rate())?;
    let half = (h.len() - 1) / 2;
    let x = clip.samples();
    let n = x.len();
    let y = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            (lo..=hi).map(|j| x[j] * h[j + half - i]).sum()
        })
        .collect();
    AudioClip::clamped(y, clip.sample_rate())
}
