use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::corpus::AudioClip;
use crate::error::{Error, Result};

/// Time/frequency geometry shared by spectrograms, relevance maps and
/// feature heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub n_bins: usize,
    pub n_frames: usize,
    /// Hz per frequency bin.
    pub bin_hz: f64,
    /// Seconds per hop; frame `k` covers `[k * hop_s, k * hop_s + window_s)`.
    pub hop_s: f64,
    pub window_s: f64,
}

impl FrameGeometry {
    pub fn cells(&self) -> usize {
        self.n_bins * self.n_frames
    }

    /// Frame whose hop start is the nearest at or below `t`.
    pub fn frame_at(&self, t: f64) -> usize {
        (t / self.hop_s + 1e-9).floor().max(0.0) as usize
    }

    pub fn frame_center(&self, k: usize) -> f64 {
        k as f64 * self.hop_s + self.window_s / 2.0
    }

    pub fn bin_freq(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }
}

/// Magnitude spectrogram, `values[bin * n_frames + frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Vec<f64>,
    pub geometry: FrameGeometry,
    pub normalized: bool,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.geometry.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.geometry.n_frames
    }

    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        self.values[bin * self.geometry.n_frames + frame]
    }

    /// Magnitudes of one frame, one per bin.
    pub fn column(&self, frame: usize) -> Vec<f64> {
        (0..self.n_bins()).map(|b| self.at(b, frame)).collect()
    }
}

pub(crate) fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Hamming-windowed STFT magnitude with FFT size equal to the window length.
///
/// The DFT is unnormalized, `X[k] = sum_n w[n] x[n] exp(-2 pi i k n / N)`,
/// so for every frame `sum_k c_k |X[k]|^2 = N * sum_n (w[n] x[n])^2` with
/// `c_k = 1` for DC and Nyquist and `2` for the interior one-sided bins.
/// The trailing partial frame is dropped.
pub fn stft_magnitude(clip: &AudioClip, window_s: f64, hop_s: f64) -> Result<Spectrogram> {
    let sr = clip.sample_rate() as f64;
    let win = (window_s * sr).round() as usize;
    let hop = (hop_s * sr).round() as usize;
    if win == 0 || hop == 0 {
        return Err(Error::Config(format!("window {window_s} s / hop {hop_s} s shorter than one sample")));
    }
    let n = clip.len();
    if n < win {
        return Err(Error::shape("stft", format!("clip of {n} samples is shorter than one {win}-sample window")));
    }
    let n_frames = (n - win) / hop + 1;
    let n_bins = win / 2 + 1;
    let window = hamming(win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win);
    let mut buf = vec![Complex::new(0.0, 0.0); win];
    let mut values = vec![0.0; n_bins * n_frames];
    let x = clip.samples();
    for f in 0..n_frames {
        let start = f * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, c) in buf.iter().take(n_bins).enumerate() {
            values[k * n_frames + f] = c.norm();
        }
    }
    Ok(Spectrogram {
        values,
        geometry: FrameGeometry {
            n_bins,
            n_frames,
            bin_hz: sr / win as f64,
            hop_s: hop as f64 / sr,
            window_s: win as f64 / sr,
        },
        normalized: false,
    })
}

/// Global z-score over all cells (population standard deviation).
pub fn zscore(spec: &Spectrogram) -> Result<Spectrogram> {
    let n = spec.values.len() as f64;
    if spec.values.len() < 2 {
        return Err(Error::Normalization("need at least two cells".into()));
    }
    let mean = spec.values.iter().sum::<f64>() / n;
    let var = spec.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1e-300)) || !sd.is_finite() {
        return Err(Error::Normalization("spectrogram has zero variance".into()));
    }
    Ok(Spectrogram {
        values: spec.values.iter().map(|v| (v - mean) / sd).collect(),
        geometry: spec.geometry,
        normalized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, secs: f64, amp: f64) -> AudioClip {
        let n = (secs * 16000.0) as usize;
        AudioClip::new((0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect(), 16000).unwrap()
    }

    /// Direct O(N^2) DFT magnitude of one windowed frame.
    fn dft_frame(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let w = hamming(n);
        (0..n / 2 + 1)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += w[i] * v * a.cos();
                    im += w[i] * v * a.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn grid_shape() {
        let s = stft_magnitude(&tone(440.0, 0.5, 0.5), 0.02, 0.01).unwrap();
        assert_eq!((s.n_bins(), s.n_frames()), (161, 49));
        assert_eq!(s.geometry.bin_hz, 50.0);
    }

    #[test]
    fn tone_peaks_at_bin_20() {
        let clip = tone(1000.0, 0.5, 0.5);
        let s = stft_magnitude(&clip, 0.02, 0.01).unwrap();
        let oracle = dft_frame(&clip.samples()[160..480]);
        let oracle_peak = oracle.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(oracle_peak, 20);
        for f in 0..s.n_frames() {
            let col = s.column(f);
            let peak = col.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(peak, 20, "frame {f}");
        }
        for (k, o) in oracle.iter().enumerate() {
            assert!((s.at(k, 1) - o).abs() < 1e-9 * o.max(1.0));
        }
    }

    #[test]
    fn zeros_stay_zero() {
        let clip = AudioClip::new(vec![0.0; 8000], 16000).unwrap();
        let s = stft_magnitude(&clip, 0.02, 0.01).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short() {
        let clip = AudioClip::new(vec![0.0; 100], 16000).unwrap();
        assert!(matches!(stft_magnitude(&clip, 0.02, 0.01), Err(Error::Shape { .. })));
    }

    #[test]
    fn parseval_per_frame() {
        let clip = tone(730.0, 0.1, 0.3);
        let s = stft_magnitude(&clip, 0.02, 0.01).unwrap();
        let w = hamming(320);
        for f in 0..s.n_frames() {
            let energy: f64 = (0..320).map(|i| (clip.samples()[f * 160 + i] * w[i]).powi(2)).sum();
            let spec: f64 = (0..161)
                .map(|k| {
                    let c = if k == 0 || k == 160 { 1.0 } else { 2.0 };
                    c * s.at(k, f).powi(2)
                })
                .sum();
            assert!((spec - 320.0 * energy).abs() <= 1e-6 * 320.0 * energy);
        }
    }

    #[test]
    fn self_concatenation_keeps_frames() {
        let clip = tone(333.0, 0.25, 0.4);
        let mut doubled = clip.samples().to_vec();
        doubled.extend_from_slice(clip.samples());
        let a = stft_magnitude(&clip, 0.02, 0.01).unwrap();
        let b = stft_magnitude(&AudioClip::new(doubled, 16000).unwrap(), 0.02, 0.01).unwrap();
        for k in 0..a.n_bins() {
            for f in 0..a.n_frames() {
                assert_eq!(a.at(k, f), b.at(k, f));
            }
        }
    }

    #[test]
    fn zscore_moments_and_idempotence() {
        let s = stft_magnitude(&tone(1000.0, 0.5, 0.5), 0.02, 0.01).unwrap();
        let z = zscore(&s).unwrap();
        let n = z.values.len() as f64;
        let mean = z.values.iter().sum::<f64>() / n;
        let sd = (z.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-6 && (sd - 1.0).abs() < 1e-6);
        let zz = zscore(&z).unwrap();
        assert!(z.values.iter().zip(&zz.values).all(|(a, b)| (a - b).abs() < 1e-6));
        assert!(z.normalized);
    }

    #[test]
    fn zscore_constant_fails() {
        let clip = AudioClip::new(vec![0.0; 8000], 16000).unwrap();
        let s = stft_magnitude(&clip, 0.02, 0.01).unwrap();
        assert!(matches!(zscore(&s), Err(Error::Normalization(_))));
    }
}
