//! Browser demo over a handful of synthetic minimal pairs: view a token's
//! spectrogram under each augmentation, train a small LeNet, and explain
//! its decisions with a chosen relevance rule.

use stresslrp::corpus::{synthesize_corpus, synthesize_noise, AugmentationTag, Sample, SynthParams};
use stresslrp::dsp::{lowpass, mix_at_snr, stft_magnitude, Spectrogram};
use stresslrp::lrp::{Rule, RuleConfig};
use stresslrp::nn::{build, fold_batchnorm, Architecture, NetworkSpec};
use stresslrp::pipeline::{explain, labeled_set, region_mu, FrontEnd, AUGMENT_CUTOFF_HZ};
use stresslrp::train::{train, LabeledSet, TrainConfig};
use stresslrp::SAMPLE_RATE;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    samples: Vec<Sample>,
    noise: stresslrp::corpus::AudioClip,
    front_end: FrontEnd,
    seed: u64,
    net: Option<NetworkSpec>,
    n_bins: usize,
    n_frames: usize,
}

fn augmentation(name: &str) -> Result<AugmentationTag, String> {
    match name {
        "none" => Ok(AugmentationTag::None),
        "lowpass" => Ok(AugmentationTag::Lowpass),
        "snr20" => Ok(AugmentationTag::Snr20),
        "snr10" => Ok(AugmentationTag::Snr10),
        "snr3" => Ok(AugmentationTag::Snr3),
        other => Err(format!("unknown augmentation `{other}`")),
    }
}

fn db(spec: &Spectrogram) -> Vec<f32> {
    spec.values.iter().map(|&m| (20.0 * (m + 1e-9).log10()) as f32).collect()
}

impl Demo {
    pub fn try_new(seed: u64, n_per_class: usize) -> Result<Demo, String> {
        let corpus = synthesize_corpus(n_per_class, seed, &SynthParams::default()).map_err(|e| e.to_string())?;
        let noise = synthesize_noise(1.0, SAMPLE_RATE, seed ^ 0x5eed).map_err(|e| e.to_string())?;
        let front_end = FrontEnd::default();
        let g = front_end.geometry(SAMPLE_RATE).map_err(|e| e.to_string())?;
        Ok(Demo {
            samples: corpus.into_iter().map(|(s, _)| s).collect(),
            noise,
            front_end,
            seed,
            net: None,
            n_bins: g.n_bins,
            n_frames: g.n_frames,
        })
    }

    fn sample(&self, index: usize) -> Result<&Sample, String> {
        self.samples.get(index).ok_or_else(|| format!("no sample {index} (have {})", self.samples.len()))
    }

    /// Magnitude spectrogram in dB of one token after `aug`.
    pub fn try_spectrogram(&self, index: usize, aug: &str) -> Result<Vec<f32>, String> {
        let s = self.sample(index)?;
        let clip = match augmentation(aug)? {
            AugmentationTag::None => s.clip.clone(),
            AugmentationTag::Lowpass => lowpass(&s.clip, AUGMENT_CUTOFF_HZ).map_err(|e| e.to_string())?,
            tag => mix_at_snr(&s.clip, &self.noise, tag.snr_db().expect("noise tag")).map_err(|e| e.to_string())?,
        };
        let spec = stft_magnitude(&clip, self.front_end.window_s, self.front_end.hop_s).map_err(|e| e.to_string())?;
        Ok(db(&spec))
    }

    /// Trains on even-numbered word types and returns the per-epoch loss
    /// followed by the accuracy on the odd ones.
    pub fn try_train(&mut self, epochs: usize) -> Result<Vec<f64>, String> {
        let (fit, held): (Vec<_>, Vec<_>) = self.samples.iter().cloned().enumerate().partition(|(i, _)| (i / 2) % 2 == 0);
        let fit: Vec<Sample> = fit.into_iter().map(|(_, s)| s).collect();
        let held: Vec<Sample> = held.into_iter().map(|(_, s)| s).collect();
        let fit_set = labeled_set(&fit, &self.front_end).map_err(|e| e.to_string())?;
        let held_set = if held.is_empty() { LabeledSet::default() } else { labeled_set(&held, &self.front_end).map_err(|e| e.to_string())? };
        let shape = self.front_end.input_shape(SAMPLE_RATE).map_err(|e| e.to_string())?;
        let init = build(Architecture::LeNet5, &shape, self.seed).map_err(|e| e.to_string())?;
        let cfg = TrainConfig { epochs, seed: self.seed, batch_size: 4, ..TrainConfig::default() };
        let (net, history) = train(&init, &fit_set, &LabeledSet::default(), &cfg).map_err(|e| e.to_string())?;
        let accuracy = if held_set.is_empty() {
            f64::NAN
        } else {
            stresslrp::train::evaluate(&net, &held_set).map_err(|e| e.to_string())?.accuracy
        };
        self.net = Some(fold_batchnorm(&net).map_err(|e| e.to_string())?);
        let mut out = history.train_loss;
        out.push(accuracy);
        Ok(out)
    }

    /// Relevance grid for the true class under `rule`, followed by the
    /// six region ratios and the predicted class.
    pub fn try_explain(&self, index: usize, rule: &str) -> Result<Vec<f32>, String> {
        let net = self.net.as_ref().ok_or("train the model first")?;
        let rule: Rule = rule.parse().map_err(|e: stresslrp::Error| e.to_string())?;
        let s = self.sample(index)?;
        let e = explain(net, s, &self.front_end, &RuleConfig::with_rule(rule), None).map_err(|e| e.to_string())?;
        let mu = region_mu(s, &e.map, &e.spectrogram).map_err(|e| e.to_string())?;
        let mut out: Vec<f32> = e.map.grid().iter().map(|&v| v as f32).collect();
        out.extend(mu.mu.iter().map(|&v| v as f32));
        out.push(e.predicted as f32);
        Ok(out)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, n_per_class: usize) -> Result<Demo, JsError> {
        Demo::try_new(seed as u64, n_per_class).map_err(|e| JsError::new(&e))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// `word (initial|final)` for the sample picker.
    pub fn label(&self, index: usize) -> String {
        self.samples.get(index).map_or_else(String::new, |s| {
            format!("{} ({})", s.word_type, if s.stress().class_index() == 0 { "initial" } else { "final" })
        })
    }

    /// Stressed and unstressed vowel spans in frames, as JSON.
    pub fn vowels(&self, index: usize) -> String {
        let Some(s) = self.samples.get(index) else { return "null".into() };
        let hop = self.front_end.hop_s;
        let spans: Vec<(f64, f64, bool)> = s
            .alignment
            .phones
            .iter()
            .filter(|p| p.is_vowel)
            .map(|p| (p.start / hop, p.end / hop, p.is_stressed_vowel))
            .collect();
        serde_json::to_string(&spans).unwrap_or_else(|_| "null".into())
    }

    pub fn spectrogram(&self, index: usize, augmentation: &str) -> Result<Vec<f32>, JsError> {
        self.try_spectrogram(index, augmentation).map_err(|e| JsError::new(&e))
    }

    pub fn train(&mut self, epochs: usize) -> Result<Vec<f64>, JsError> {
        self.try_train(epochs).map_err(|e| JsError::new(&e))
    }

    pub fn explain(&self, index: usize, rule: &str) -> Result<Vec<f32>, JsError> {
        self.try_explain(index, rule).map_err(|e| JsError::new(&e))
    }
}
