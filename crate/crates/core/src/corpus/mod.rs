//! Audio, alignments and manifests: everything needed to turn recorded (or
//! synthesized) disyllabic word tokens into fixed-width training samples.

mod manifest;
mod split;
pub mod synth;
mod wav;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{load_manifest, load_manifest_entries, write_manifest, ManifestRow};
pub use split::{assign_word_types, split_by_word_type, DatasetSplit, SplitCounts, SplitName};
pub use synth::{
    mix_seed, synthesize_corpus, synthesize_disyllable, synthesize_disyllable_with_truth, synthesize_noise, SynthParams,
    SynthTruth, VowelTruth,
};
pub use wav::{read_wav, write_wav};
pub use window::extract_word_window;

/// Tolerance for comparing alignment times, in seconds.
const TIME_EPS: f64 = 1e-9;

/// Mono PCM audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::validation("sample_rate", "must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::validation("samples", "clip is empty"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::validation(
                "samples",
                format!("sample {i} = {} is not a finite value in [-1, 1]", samples[i]),
            ));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Builds a clip after clamping every sample into `[-1, 1]`.
    pub fn clamped(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        for s in &mut samples {
            *s = s.clamp(-1.0, 1.0);
        }
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sample index for a time in seconds (rounded to nearest).
    pub fn index_at(&self, t: f64) -> usize {
        (t * self.sample_rate as f64).round().max(0.0) as usize
    }

    /// Root-mean-square amplitude over `[start, end)` seconds, clipped to the
    /// clip bounds. Empty intervals have RMS 0.
    pub fn rms_between(&self, start: f64, end: f64) -> f64 {
        let a = self.index_at(start).min(self.len());
        let b = self.index_at(end).min(self.len());
        rms(&self.samples[a..b.max(a)])
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stress {
    Initial,
    Final,
}

impl Stress {
    /// Class index used by the classifiers.
    pub fn class_index(self) -> usize {
        match self {
            Stress::Initial => 0,
            Stress::Final => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Stress::Initial),
            1 => Some(Stress::Final),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Stress::Initial => Stress::Final,
            Stress::Final => Stress::Initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phone {
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub is_vowel: bool,
    pub is_stressed_vowel: bool,
}

impl Phone {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Word and phone intervals of one token, in seconds relative to its audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub word_label: String,
    pub word_start: f64,
    pub word_end: f64,
    pub phones: Vec<Phone>,
    pub syllable_boundary: f64,
    pub stress: Stress,
}

impl Alignment {
    pub fn validate(&self) -> Result<()> {
        let times = [self.word_start, self.word_end, self.syllable_boundary];
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("word_start", "times must be finite"));
        }
        if self.word_start < 0.0 || self.word_end < self.word_start {
            return Err(Error::validation(
                "word_end",
                format!("word interval [{}, {}] is inverted or negative", self.word_start, self.word_end),
            ));
        }
        if self.syllable_boundary < self.word_start - TIME_EPS
            || self.syllable_boundary > self.word_end + TIME_EPS
        {
            return Err(Error::validation(
                "syllable_boundary",
                format!("{} lies outside the word", self.syllable_boundary),
            ));
        }
        for (i, p) in self.phones.iter().enumerate() {
            if !(p.start.is_finite() && p.end.is_finite()) || p.end < p.start {
                return Err(Error::validation(format!("phones[{i}]"), "interval is inverted or not finite"));
            }
            if p.start < self.word_start - TIME_EPS || p.end > self.word_end + TIME_EPS {
                return Err(Error::validation(format!("phones[{i}]"), "interval lies outside the word"));
            }
            if p.is_stressed_vowel && !p.is_vowel {
                return Err(Error::validation(
                    format!("phones[{i}].is_stressed_vowel"),
                    "stressed phone is not a vowel",
                ));
            }
        }
        for (i, pair) in self.phones.windows(2).enumerate() {
            if pair[1].start < pair[0].end - TIME_EPS {
                return Err(Error::validation(
                    format!("phones[{}]", i + 1),
                    "phones overlap or are out of order",
                ));
            }
        }
        let stressed = self.phones.iter().filter(|p| p.is_stressed_vowel).count();
        if stressed != 1 {
            return Err(Error::validation(
                "is_stressed_vowel",
                format!("expected exactly one stressed vowel, found {stressed}"),
            ));
        }
        let sv = self.stressed_vowel();
        let in_initial = sv.midpoint() < self.syllable_boundary;
        if in_initial != (self.stress == Stress::Initial) {
            return Err(Error::validation("stress", "stress label disagrees with the stressed vowel position"));
        }
        Ok(())
    }

    /// The phone flagged as the stressed vowel. Only meaningful on a
    /// validated alignment.
    pub fn stressed_vowel(&self) -> &Phone {
        self.phones
            .iter()
            .find(|p| p.is_stressed_vowel)
            .expect("validated alignment has a stressed vowel")
    }

    /// First vowel of the initial syllable.
    pub fn initial_vowel(&self) -> Option<&Phone> {
        self.phones
            .iter()
            .find(|p| p.is_vowel && p.midpoint() < self.syllable_boundary)
    }

    /// Last vowel of the final syllable.
    pub fn final_vowel(&self) -> Option<&Phone> {
        self.phones
            .iter()
            .rev()
            .find(|p| p.is_vowel && p.midpoint() >= self.syllable_boundary)
    }

    /// Shifts every time by `-offset` and clips to `[0, window_s]`. Phones
    /// that end up empty are dropped.
    pub fn rebased(&self, offset: f64, window_s: f64) -> Alignment {
        let clip = |t: f64| (t - offset).clamp(0.0, window_s);
        let phones = self
            .phones
            .iter()
            .map(|p| Phone { start: clip(p.start), end: clip(p.end), ..p.clone() })
            .filter(|p| p.end > p.start)
            .collect();
        Alignment {
            word_label: self.word_label.clone(),
            word_start: clip(self.word_start),
            word_end: clip(self.word_end),
            phones,
            syllable_boundary: clip(self.syllable_boundary),
            stress: self.stress,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentationTag {
    #[default]
    None,
    Lowpass,
    Snr20,
    Snr10,
    Snr3,
}

impl AugmentationTag {
    /// Noise augmentation level in dB, if any.
    pub fn snr_db(self) -> Option<f64> {
        match self {
            AugmentationTag::Snr20 => Some(20.0),
            AugmentationTag::Snr10 => Some(10.0),
            AugmentationTag::Snr3 => Some(3.0),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationTag::None => "none",
            AugmentationTag::Lowpass => "lowpass",
            AugmentationTag::Snr20 => "snr20",
            AugmentationTag::Snr10 => "snr10",
            AugmentationTag::Snr3 => "snr3",
        }
    }
}

/// A fixed-width word token with its alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub clip: AudioClip,
    pub alignment: Alignment,
    pub word_type: String,
    pub source_id: String,
    pub augmentation: AugmentationTag,
}

impl Sample {
    /// Checks that `word_type` is the case-folded word label and that the
    /// alignment is valid.
    pub fn new(
        clip: AudioClip,
        alignment: Alignment,
        word_type: impl Into<String>,
        source_id: impl Into<String>,
        augmentation: AugmentationTag,
    ) -> Result<Self> {
        let word_type = word_type.into();
        alignment.validate()?;
        if word_type != word_type_of(&alignment.word_label) {
            return Err(Error::validation(
                "word_type",
                format!("`{word_type}` is not the case-folded label `{}`", alignment.word_label),
            ));
        }
        Ok(Self { clip, alignment, word_type, source_id: source_id.into(), augmentation })
    }

    pub fn stress(&self) -> Stress {
        self.alignment.stress
    }

    /// Same token with different audio (augmentation keeps timing).
    pub fn with_clip(&self, clip: AudioClip, tag: AugmentationTag) -> Sample {
        Sample { clip, augmentation: tag, ..self.clone() }
    }
}

/// Word-type identity: case-folded orthography.
pub fn word_type_of(label: &str) -> String {
    label.trim().to_lowercase()
}
