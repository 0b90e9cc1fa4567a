//! End-to-end glue: spectrogram front end, augmentation expansion,
//! training on a word-type split, and per-sample explanation and region
//! ratios.

use serde::{Deserialize, Serialize};

use crate::analysis::{iou_mu, make_regions, RegionTag};
use crate::corpus::{AudioClip, AugmentationTag, DatasetSplit, Sample};
use crate::dsp::{lowpass, mix_at_snr, stft_magnitude, zscore, FrameGeometry, Spectrogram, HOP_S, WINDOW_S};
use crate::WORD_WINDOW_S;
use crate::error::{Error, Result};
use crate::lrp::{relevance, RelevanceMap, RuleConfig};
use crate::nn::{NetworkSpec, Tensor};
use crate::par;
use crate::train::{train, LabeledSet, TrainConfig, TrainHistory};

/// Low-pass cutoff used for augmentation.
pub const AUGMENT_CUTOFF_HZ: f64 = 3000.0;
/// SNR tags produced by augmentation, in output order.
pub const AUGMENT_TAGS: [AugmentationTag; 4] =
    [AugmentationTag::Lowpass, AugmentationTag::Snr20, AugmentationTag::Snr10, AugmentationTag::Snr3];

/// Raw magnitude spectrogram and the z-scored network input built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub spectrogram: Spectrogram,
    pub input: Tensor,
}

/// Word-window and STFT timing shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontEnd {
    pub window_s: f64,
    pub hop_s: f64,
    pub word_window_s: f64,
}

impl Default for FrontEnd {
    fn default() -> Self {
        Self { window_s: WINDOW_S, hop_s: HOP_S, word_window_s: WORD_WINDOW_S }
    }
}

impl FrontEnd {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("window_s", self.window_s), ("hop_s", self.hop_s), ("word_window_s", self.word_window_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.window_s > self.word_window_s {
            return Err(Error::Config(format!(
                "STFT window {} s is longer than the word window {} s",
                self.window_s, self.word_window_s
            )));
        }
        Ok(())
    }

    /// Spectrogram geometry of one word window at `sample_rate`.
    pub fn geometry(&self, sample_rate: u32) -> Result<FrameGeometry> {
        self.validate()?;
        let n = (self.word_window_s * sample_rate as f64).round() as usize;
        Ok(stft_magnitude(&AudioClip::new(vec![0.0; n], sample_rate)?, self.window_s, self.hop_s)?.geometry)
    }

    /// Network input shape `[1, bins, frames]`.
    pub fn input_shape(&self, sample_rate: u32) -> Result<Vec<usize>> {
        let g = self.geometry(sample_rate)?;
        Ok(vec![1, g.n_bins, g.n_frames])
    }
}

/// STFT magnitude z-scored into a `[1, bins, frames]` tensor.
pub fn featurize(clip: &AudioClip, fe: &FrontEnd) -> Result<Features> {
    let spectrogram = stft_magnitude(clip, fe.window_s, fe.hop_s)?;
    let z = zscore(&spectrogram)?;
    let g = z.geometry;
    let input = Tensor::new(vec![1, g.n_bins, g.n_frames], z.values)?;
    Ok(Features { spectrogram, input })
}

/// The four augmented copies of `sample`: low-passed and mixed with
/// `noise` at 20, 10 and 3 dB SNR.
pub fn augment_sample(sample: &Sample, noise: &AudioClip) -> Result<Vec<Sample>> {
    AUGMENT_TAGS
        .iter()
        .map(|&tag| {
            let clip = match tag.snr_db() {
                Some(snr) => mix_at_snr(&sample.clip, noise, snr)?,
                None => lowpass(&sample.clip, AUGMENT_CUTOFF_HZ)?,
            };
            Ok(sample.with_clip(clip, tag))
        })
        .collect()
}

/// Originals followed by their augmented copies (five rows per sample).
pub fn augment_all(samples: &[Sample], noise: &AudioClip) -> Result<Vec<Sample>> {
    let extra = par::map(samples, |s| augment_sample(s, noise));
    let mut out = samples.to_vec();
    for e in extra {
        out.extend(e?);
    }
    Ok(out)
}

/// Network inputs and stress labels for `samples`.
pub fn labeled_set(samples: &[Sample], fe: &FrontEnd) -> Result<LabeledSet> {
    let inputs = par::map(samples, |s| featurize(&s.clip, fe).map(|f| f.input));
    let inputs = inputs.into_iter().collect::<Result<Vec<_>>>()?;
    LabeledSet::new(inputs, samples.iter().map(|s| s.stress().class_index()).collect())
}

/// Trains on the training part of `split` (augmented when `noise` is
/// given), selecting weights on the validation part.
pub fn train_on_split(
    net: &NetworkSpec,
    split: &DatasetSplit,
    noise: Option<&AudioClip>,
    fe: &FrontEnd,
    cfg: &TrainConfig,
) -> Result<(NetworkSpec, TrainHistory)> {
    if split.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let train_samples = match noise {
        Some(n) => augment_all(&split.train, n)?,
        None => split.train.clone(),
    };
    let train_set = labeled_set(&train_samples, fe)?;
    let val_set = labeled_set(&split.validation, fe)?;
    train(net, &train_set, &val_set, cfg)
}

/// Relevance of one sample and the model's view of it.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub map: RelevanceMap,
    pub spectrogram: Spectrogram,
    pub logits: Vec<f64>,
    pub predicted: usize,
    pub target: usize,
}

/// Explains `sample` with a batch-norm-free network; `target` defaults to
/// the sample's true stress class.
pub fn explain(net: &NetworkSpec, sample: &Sample, fe: &FrontEnd, rules: &RuleConfig, target: Option<usize>) -> Result<Explanation> {
    let feats = featurize(&sample.clip, fe)?;
    let (logits, trace) = net.forward(&feats.input)?;
    let target = target.unwrap_or_else(|| sample.stress().class_index());
    let map = relevance(&trace, target, rules)?;
    Ok(Explanation { map, spectrogram: feats.spectrogram, predicted: logits.argmax(), logits: logits.into_data(), target })
}

/// Region ratios of one sample, indexed like [`RegionTag::ALL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMu {
    pub source_id: String,
    pub mu: [f64; 6],
}

impl SampleMu {
    pub fn get(&self, tag: RegionTag) -> f64 {
        self.mu[RegionTag::ALL.iter().position(|&t| t == tag).expect("listed tag")]
    }
}

pub fn region_mu(sample: &Sample, map: &RelevanceMap, spectrogram: &Spectrogram) -> Result<SampleMu> {
    let regions = make_regions(&sample.alignment, &spectrogram.geometry)?;
    let mut mu = [0.0; 6];
    for (slot, &tag) in mu.iter_mut().zip(RegionTag::ALL.iter()) {
        *slot = iou_mu(map, &regions.get(tag))?;
    }
    Ok(SampleMu { source_id: sample.source_id.clone(), mu })
}

/// Column means of per-sample ratios.
pub fn mean_mu(rows: &[SampleMu]) -> Option<[f64; 6]> {
    if rows.is_empty() {
        return None;
    }
    let mut out = [0.0; 6];
    for r in rows {
        out.iter_mut().zip(r.mu).for_each(|(o, v)| *o += v);
    }
    Some(out.map(|v| v / rows.len() as f64))
}
