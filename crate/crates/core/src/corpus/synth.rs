//! Synthetic disyllables with known ground truth.
//!
//! Each token is two harmonic "vowel" bursts (first `n_harmonics` harmonics
//! of F0 shaped by two Gaussian spectral envelopes) preceded by short noise
//! "consonants" and separated by a quiet gap. The stressed vowel is longer,
//! louder and higher-pitched than the unstressed one, by the multipliers in
//! [`SynthParams`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rms, Alignment, AudioClip, AugmentationTag, Phone, Sample, Stress};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub f0_hz: f64,
    /// Centers of the two spectral envelopes (F1, F2).
    pub formant_hz: [f64; 2],
    /// Standard deviations of the Gaussian envelopes.
    pub formant_width_hz: [f64; 2],
    pub formant_gain: [f64; 2],
    pub n_harmonics: usize,
    pub lead_s: f64,
    pub consonant_s: f64,
    pub vowel_s: f64,
    pub gap_s: f64,
    pub ramp_s: f64,
    pub vowel_rms: f64,
    pub consonant_rms: f64,
    pub noise_floor: f64,
    pub stressed_duration_mult: f64,
    pub unstressed_duration_mult: f64,
    pub stressed_amplitude_mult: f64,
    pub unstressed_amplitude_mult: f64,
    pub stressed_pitch_mult: f64,
    pub unstressed_pitch_mult: f64,
    /// Relative jitter applied per token (shared values) and, at a third of
    /// the size, per vowel.
    pub jitter: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            sample_rate: crate::SAMPLE_RATE,
            duration_s: crate::WORD_WINDOW_S,
            f0_hz: 120.0,
            formant_hz: [500.0, 1500.0],
            formant_width_hz: [90.0, 120.0],
            formant_gain: [1.0, 0.6],
            n_harmonics: 12,
            lead_s: 0.02,
            consonant_s: 0.03,
            vowel_s: 0.09,
            gap_s: 0.04,
            ramp_s: 0.010,
            vowel_rms: 0.15,
            consonant_rms: 0.02,
            noise_floor: 0.001,
            stressed_duration_mult: 1.6,
            unstressed_duration_mult: 1.0,
            stressed_amplitude_mult: 1.0,
            unstressed_amplitude_mult: 0.45,
            stressed_pitch_mult: 1.2,
            unstressed_pitch_mult: 1.0,
            jitter: 0.08,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let mults = [
            ("stressed_duration_mult", self.stressed_duration_mult),
            ("unstressed_duration_mult", self.unstressed_duration_mult),
            ("stressed_amplitude_mult", self.stressed_amplitude_mult),
            ("unstressed_amplitude_mult", self.unstressed_amplitude_mult),
            ("stressed_pitch_mult", self.stressed_pitch_mult),
            ("unstressed_pitch_mult", self.unstressed_pitch_mult),
        ];
        for (name, v) in mults {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sample_rate == 0 || !(self.duration_s > 0.0) || !(self.f0_hz > 0.0) {
            return Err(Error::Config("sample rate, duration and F0 must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::Config(format!("jitter {} outside [0, 0.5)", self.jitter)));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        let top = self.f0_hz * self.stressed_pitch_mult.max(self.unstressed_pitch_mult) * self.n_harmonics as f64;
        if top * (1.0 + self.jitter) >= nyquist {
            return Err(Error::Config(format!("highest harmonic {top:.0} Hz reaches Nyquist")));
        }
        let worst = (1.0 + self.jitter)
            * (self.lead_s + 2.0 * self.consonant_s + self.gap_s)
            + self.vowel_s
                * (1.0 + self.jitter)
                * (1.0 + self.jitter / 3.0)
                * (self.stressed_duration_mult + self.unstressed_duration_mult);
        if worst > self.duration_s {
            return Err(Error::Config(format!(
                "token layout needs up to {worst:.3} s, window is {} s",
                self.duration_s
            )));
        }
        Ok(())
    }

    /// Deterministic per-word-type variant: shifts F0 and both envelope
    /// centers so different word types sound different.
    pub fn for_word_type(&self, index: usize, seed: u64) -> SynthParams {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index as u64));
        let mut p = self.clone();
        p.f0_hz *= rng.gen_range(0.85..1.15);
        p.formant_hz[0] *= rng.gen_range(0.8..1.25);
        p.formant_hz[1] *= rng.gen_range(0.85..1.2);
        p
    }
}

/// Realized values for one synthetic vowel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VowelTruth {
    pub start: f64,
    pub end: f64,
    pub f0_hz: f64,
    pub formant_hz: [f64; 2],
    pub formant_width_hz: [f64; 2],
    pub rms: f64,
}

/// A synthetic token together with the values used to generate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub clip: AudioClip,
    pub alignment: Alignment,
    /// Initial vowel first.
    pub vowels: [VowelTruth; 2],
}

pub fn synthesize_disyllable(stress: Stress, seed: u64, params: &SynthParams) -> Result<(AudioClip, Alignment)> {
    let t = synthesize_disyllable_with_truth(stress, seed, params, "syn")?;
    Ok((t.clip, t.alignment))
}

pub fn synthesize_disyllable_with_truth(
    stress: Stress,
    seed: u64,
    params: &SynthParams,
    word_label: &str,
) -> Result<SynthTruth> {
    params.validate()?;
    let p = params;
    let sr = p.sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = p.jitter;
    let mut jit = |scale: f64| 1.0 + scale * rng.gen_range(-1.0..=1.0);

    let f0 = p.f0_hz * jit(j);
    let formants = [p.formant_hz[0] * jit(j), p.formant_hz[1] * jit(j)];
    let vowel_s = p.vowel_s * jit(j);
    let vowel_rms = p.vowel_rms * jit(j);
    let lead = p.lead_s * jit(j);
    let cons = p.consonant_s * jit(j);
    let gap = p.gap_s * jit(j);

    let stressed_first = stress == Stress::Initial;
    let mult = |stressed: bool| {
        if stressed {
            (p.stressed_duration_mult, p.stressed_amplitude_mult, p.stressed_pitch_mult)
        } else {
            (p.unstressed_duration_mult, p.unstressed_amplitude_mult, p.unstressed_pitch_mult)
        }
    };
    let (d1, a1, p1) = mult(stressed_first);
    let (d2, a2, p2) = mult(!stressed_first);
    let dur = [vowel_s * d1 * jit(j / 3.0), vowel_s * d2 * jit(j / 3.0)];
    let amp = [vowel_rms * a1 * jit(j / 3.0), vowel_rms * a2 * jit(j / 3.0)];
    let pitch = [f0 * p1, f0 * p2];

    let c1 = (lead, lead + cons);
    let v1 = (c1.1, c1.1 + dur[0]);
    let boundary = v1.1 + gap / 2.0;
    let c2 = (v1.1 + gap, v1.1 + gap + cons);
    let v2 = (c2.1, c2.1 + dur[1]);

    let n = (p.duration_s * sr).round() as usize;
    let mut x = vec![0.0; n];
    let idx = |t: f64| ((t * sr).round() as usize).min(n);

    for (span, target) in [(c1, p.consonant_rms), (c2, p.consonant_rms)] {
        let (a, b) = (idx(span.0), idx(span.1));
        let mut burst: Vec<f64> = (a..b).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        apply_ramp(&mut burst, (0.005 * sr) as usize);
        scale_to_rms(&mut burst, target);
        x[a..b].copy_from_slice(&burst);
    }

    let ramp = (p.ramp_s * sr).round() as usize;
    let mut vowels = Vec::with_capacity(2);
    for (k, span) in [v1, v2].into_iter().enumerate() {
        let (a, b) = (idx(span.0), idx(span.1));
        let phases: Vec<f64> = (0..p.n_harmonics).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let mut burst: Vec<f64> = (a..b)
            .map(|i| {
                let t = i as f64 / sr;
                (1..=p.n_harmonics)
                    .zip(&phases)
                    .map(|(h, ph)| {
                        let f = h as f64 * pitch[k];
                        envelope(f, &formants, &p.formant_width_hz, &p.formant_gain) * (2.0 * PI * f * t + ph).sin()
                    })
                    .sum()
            })
            .collect();
        apply_ramp(&mut burst, ramp);
        scale_to_rms(&mut burst, amp[k]);
        x[a..b].copy_from_slice(&burst);
        vowels.push(VowelTruth {
            start: span.0,
            end: span.1,
            f0_hz: pitch[k],
            formant_hz: formants,
            formant_width_hz: p.formant_width_hz,
            rms: amp[k],
        });
    }

    for s in &mut x {
        *s += p.noise_floor * rng.gen_range(-1.0..=1.0);
    }

    let labels = ["K", "AA", "T", "IY"];
    let phones = vec![
        Phone { label: labels[0].into(), start: c1.0, end: c1.1, is_vowel: false, is_stressed_vowel: false },
        Phone {
            label: format!("{}{}", labels[1], u8::from(stressed_first)),
            start: v1.0,
            end: v1.1,
            is_vowel: true,
            is_stressed_vowel: stressed_first,
        },
        Phone { label: labels[2].into(), start: c2.0, end: c2.1, is_vowel: false, is_stressed_vowel: false },
        Phone {
            label: format!("{}{}", labels[3], u8::from(!stressed_first)),
            start: v2.0,
            end: v2.1,
            is_vowel: true,
            is_stressed_vowel: !stressed_first,
        },
    ];
    let alignment = Alignment {
        word_label: word_label.to_string(),
        word_start: 0.0,
        word_end: v2.1,
        phones,
        syllable_boundary: boundary,
        stress,
    };
    alignment.validate()?;
    let clip = AudioClip::clamped(x, p.sample_rate)?;
    let vowels: [VowelTruth; 2] = vowels.try_into().expect("two vowels");
    Ok(SynthTruth { clip, alignment, vowels })
}

fn envelope(f: f64, centers: &[f64; 2], widths: &[f64; 2], gains: &[f64; 2]) -> f64 {
    0.01 + (0..2)
        .map(|i| gains[i] * (-(f - centers[i]).powi(2) / (2.0 * widths[i] * widths[i])).exp())
        .sum::<f64>()
}

fn apply_ramp(x: &mut [f64], ramp: usize) {
    let n = x.len();
    let r = ramp.min(n / 2);
    for i in 0..r {
        let g = i as f64 / r as f64;
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

fn scale_to_rms(x: &mut [f64], target: f64) {
    let r = rms(x);
    if r > 0.0 {
        let g = target / r;
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// SplitMix64 finalizer used to derive independent per-item seeds.
pub fn mix_seed(seed: u64, item: u64) -> u64 {
    let mut z = seed ^ item.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One minimal pair (one token per stress class) per word type.
pub fn synthesize_corpus(n_per_class: usize, seed: u64, params: &SynthParams) -> Result<Vec<(Sample, SynthTruth)>> {
    let mut out = Vec::with_capacity(2 * n_per_class);
    for t in 0..n_per_class {
        let word = format!("syn{t:04}");
        let p = params.for_word_type(t, seed);
        for (k, stress) in [Stress::Initial, Stress::Final].into_iter().enumerate() {
            let truth = synthesize_disyllable_with_truth(stress, mix_seed(seed, (2 * t + k) as u64 + 1), &p, &word)?;
            let tag = match stress {
                Stress::Initial => "is",
                Stress::Final => "fs",
            };
            let sample = Sample::new(
                truth.clip.clone(),
                truth.alignment.clone(),
                word.clone(),
                format!("{word}-{tag}"),
                AugmentationTag::None,
            )?;
            out.push((sample, truth));
        }
    }
    Ok(out)
}

/// Seeded broadband babble-like noise: a few overlapping harmonic voices
/// with drifting pitch plus white noise.
pub fn synthesize_noise(duration_s: f64, sample_rate: u32, seed: u64) -> Result<AudioClip> {
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let voices: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| (rng.gen_range(90.0..220.0), rng.gen_range(0.5..3.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let voiced: f64 = voices
                .iter()
                .map(|&(f0, rate, ph)| {
                    let f = f0 * (1.0 + 0.1 * (2.0 * PI * rate * t + ph).sin());
                    (1..=8).map(|h| (2.0 * PI * f * h as f64 * t + ph * h as f64).sin() / h as f64).sum::<f64>()
                        * (0.5 + 0.5 * (2.0 * PI * rate * 0.7 * t + ph).sin())
                })
                .sum();
            voiced + 0.5 * rng.gen_range(-1.0..=1.0)
        })
        .collect();
    scale_to_rms(&mut x, 0.1);
    AudioClip::clamped(x, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vowel_rms(c: &AudioClip, a: &Alignment) -> (f64, f64) {
        let i = a.initial_vowel().unwrap();
        let f = a.final_vowel().unwrap();
        (c.rms_between(i.start, i.end), c.rms_between(f.start, f.end))
    }

    #[test]
    fn initial_stress_is_louder_and_longer_first() {
        let (c, a) = synthesize_disyllable(Stress::Initial, 1, &SynthParams::default()).unwrap();
        assert_eq!(c.len(), 8000);
        let (ri, rf) = vowel_rms(&c, &a);
        assert!(ri > rf);
        assert!(a.initial_vowel().unwrap().duration() > a.final_vowel().unwrap().duration());
        assert!(a.initial_vowel().unwrap().is_stressed_vowel);
    }

    #[test]
    fn final_stress_reverses() {
        let (c, a) = synthesize_disyllable(Stress::Final, 1, &SynthParams::default()).unwrap();
        let (ri, rf) = vowel_rms(&c, &a);
        assert!(ri < rf);
        assert!(a.initial_vowel().unwrap().duration() < a.final_vowel().unwrap().duration());
        assert!(a.final_vowel().unwrap().is_stressed_vowel);
    }

    #[test]
    fn deterministic() {
        let p = SynthParams::default();
        assert_eq!(synthesize_disyllable(Stress::Final, 9, &p).unwrap(), synthesize_disyllable(Stress::Final, 9, &p).unwrap());
    }

    #[test]
    fn boundary_at_gap_midpoint() {
        let (_, a) = synthesize_disyllable(Stress::Initial, 4, &SynthParams::default()).unwrap();
        let mid = 0.5 * (a.phones[1].end + a.phones[2].start);
        assert!((a.syllable_boundary - mid).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_multiplier_rejected() {
        let p = SynthParams { unstressed_amplitude_mult: 0.0, ..Default::default() };
        assert!(matches!(synthesize_disyllable(Stress::Initial, 0, &p), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_pairs_share_word_type() {
        let c = synthesize_corpus(3, 5, &SynthParams::default()).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c[0].0.word_type, c[1].0.word_type);
        assert_ne!(c[0].0.word_type, c[2].0.word_type);
        assert_eq!(c[0].0.stress(), Stress::Initial);
        assert_eq!(c[1].0.stress(), Stress::Final);
    }

    proptest::proptest! {
        #[test]
        fn swapping_stress_swaps_rms_order(seed in proptest::prelude::any::<u64>()) {
            let p = SynthParams::default();
            let (ci, ai) = synthesize_disyllable(Stress::Initial, seed, &p).unwrap();
            let (cf, af) = synthesize_disyllable(Stress::Final, seed, &p).unwrap();
            let (a, b) = vowel_rms(&ci, &ai);
            let (c, d) = vowel_rms(&cf, &af);
            proptest::prop_assert!(a > b && c < d);
        }
    }
}
