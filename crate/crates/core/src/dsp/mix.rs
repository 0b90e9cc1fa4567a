use crate::corpus::AudioClip;
use crate::error::{Error, Result};

/// The mixture together with the exact components it was built from.
#[derive(Debug, Clone)]
pub struct NoiseMix {
    pub mixture: AudioClip,
    /// Noise after looping/cropping and scaling, before clipping.
    pub scaled_noise: Vec<f64>,
    pub scale: f64,
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Adds `noise` (looped or cropped to the clip length) scaled to reach
/// `snr_db` over the whole window, then clips the sum to `[-1, 1]`.
pub fn mix_at_snr(clip: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<AudioClip> {
    Ok(mix_at_snr_detailed(clip, noise, snr_db)?.mixture)
}

pub fn mix_at_snr_detailed(clip: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<NoiseMix> {
    if clip.sample_rate() != noise.sample_rate() {
        return Err(Error::Config(format!(
            "sample rates differ: clip {} Hz, noise {} Hz",
            clip.sample_rate(),
            noise.sample_rate()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("SNR {snr_db} dB is not finite")));
    }
    let looped: Vec<f64> = noise.samples().iter().copied().cycle().take(clip.len()).collect();
    let pn = power(&looped);
    if !(pn > 0.0) {
        return Err(Error::Config("noise is silent over the clip length".into()));
    }
    let ps = power(clip.samples());
    let scale = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled_noise: Vec<f64> = looped.iter().map(|v| v * scale).collect();
    let mixed = clip.samples().iter().zip(&scaled_noise).map(|(s, n)| s + n).collect();
    Ok(NoiseMix { mixture: AudioClip::clamped(mixed, clip.sample_rate())?, scaled_noise, scale })
}
