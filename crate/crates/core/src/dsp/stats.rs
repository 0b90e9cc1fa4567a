use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sample, Stress};
use crate::error::{Error, Result};

/// Initial-versus-final vowel ratios of one token, each `a / (a + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VowelRatio {
    pub source_id: String,
    pub stress: Stress,
    pub amplitude_ratio: f64,
    pub duration_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub amplitude_mean: f64,
    pub amplitude_sd: f64,
    pub duration_mean: f64,
    pub duration_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub ratios: Vec<VowelRatio>,
    pub initial: GroupStats,
    pub final_stress: GroupStats,
    /// Tokens skipped because both vowels were silent.
    pub skipped: usize,
}

impl RatioStats {
    pub fn amplitude_ratios(&self, stress: Stress) -> Vec<f64> {
        self.ratios.iter().filter(|r| r.stress == stress).map(|r| r.amplitude_ratio).collect()
    }

    pub fn duration_ratios(&self, stress: Stress) -> Vec<f64> {
        self.ratios.iter().filter(|r| r.stress == stress).map(|r| r.duration_ratio).collect()
    }
}

/// Normalized ratio `a / (a + b)`, `None` when both are zero.
fn ratio(a: f64, b: f64) -> Option<f64> {
    let s = a + b;
    (s > 0.0).then(|| a / s)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// RMS amplitude and duration ratios of the initial versus final vowel.
pub fn vowel_ratio_stats(samples: &[Sample]) -> Result<RatioStats> {
    let mut ratios = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for s in samples {
        let a = &s.alignment;
        let (Some(vi), Some(vf)) = (a.initial_vowel(), a.final_vowel()) else {
            return Err(Error::validation(
                "phones",
                format!("{}: alignment does not mark a vowel in both syllables", s.source_id),
            ));
        };
        let ri = s.clip.rms_between(vi.start, vi.end);
        let rf = s.clip.rms_between(vf.start, vf.end);
        match (ratio(ri, rf), ratio(vi.duration(), vf.duration())) {
            (Some(amplitude_ratio), Some(duration_ratio)) => ratios.push(VowelRatio {
                source_id: s.source_id.clone(),
                stress: s.stress(),
                amplitude_ratio,
                duration_ratio,
            }),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("vowel ratio statistics skipped {skipped} token(s) with silent vowels");
    }
    let group = |stress: Stress| {
        let amp: Vec<f64> = ratios.iter().filter(|r| r.stress == stress).map(|r| r.amplitude_ratio).collect();
        let dur: Vec<f64> = ratios.iter().filter(|r| r.stress == stress).map(|r| r.duration_ratio).collect();
        let (amplitude_mean, amplitude_sd) = mean_sd(&amp);
        let (duration_mean, duration_sd) = mean_sd(&dur);
        GroupStats { n: amp.len(), amplitude_mean, amplitude_sd, duration_mean, duration_sd }
    };
    let initial = group(Stress::Initial);
    let final_stress = group(Stress::Final);
    Ok(RatioStats { ratios, initial, final_stress, skipped })
}

/// Percentile bootstrap interval for `mean(a) - mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub confidence: f64,
}

impl BootstrapCI {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Resamples each group with replacement `replicates` times.
pub fn bootstrap_mean_diff(
    group_a: &[f64],
    group_b: &[f64],
    replicates: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapCI> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::validation("group", "bootstrap groups must be non-empty"));
    }
    if replicates < 100 {
        return Err(Error::Config(format!("need at least 100 replicates, got {replicates}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!("confidence {confidence} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resample_mean = |x: &[f64]| (0..x.len()).map(|_| x[rng.gen_range(0..x.len())]).sum::<f64>() / x.len() as f64;
    let mut diffs: Vec<f64> = (0..replicates).map(|_| resample_mean(group_a) - resample_mean(group_b)).collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok(BootstrapCI {
        mean_diff: mean(group_a) - mean(group_b),
        ci_low: quantile(&diffs, tail),
        ci_high: quantile(&diffs, 1.0 - tail),
        replicates,
        confidence,
    })
}
