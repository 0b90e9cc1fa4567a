use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stresslrp::analysis::{DEFAULT_PERMUTATIONS, DEFAULT_TAU};
use stresslrp::corpus::{SplitCounts, SplitName};
use stresslrp::error::{Error, Result};
use stresslrp::lrp::{Rule, RuleConfig};
use stresslrp::nn::Architecture;
use stresslrp::pipeline::FrontEnd;
use stresslrp::train::TrainConfig;

/// Whole-pipeline configuration. Every section is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Drives synthesis, splitting, initialization and shuffling. Replaces
    /// `train.seed`.
    pub seed: u64,
    pub paths: Paths,
    pub dsp: FrontEnd,
    pub synth: SynthSection,
    pub split: SplitSection,
    pub architecture: String,
    pub train: TrainConfig,
    pub lrp: LrpSection,
    pub analysis: AnalysisSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: Paths::default(),
            dsp: FrontEnd::default(),
            synth: SynthSection::default(),
            split: SplitSection::default(),
            architecture: Architecture::LeNet5.name().into(),
            train: TrainConfig::default(),
            lrp: LrpSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Source manifest for `ingest`; defaults to the synthesized one.
    pub manifest: Option<PathBuf>,
    /// Noise WAV for `augment`; defaults to the synthesized one.
    pub noise: Option<PathBuf>,
    /// Directory of `<source_id>.csv` feature tracks for `analyze`.
    pub tracks: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { manifest: None, noise: None, tracks: None, checkpoint: None, out_dir: PathBuf::from("stresslrp-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_per_class: usize,
    pub noise_s: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self { n_per_class: 200, noise_s: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { validation: 0.15, test: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrpSection {
    pub rules: Vec<Rule>,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LrpSection {
    fn default() -> Self {
        let d = RuleConfig::default();
        Self { rules: vec![Rule::Composite], epsilon: d.epsilon, alpha: d.alpha, beta: d.beta }
    }
}

impl LrpSection {
    pub fn rule_configs(&self) -> Vec<RuleConfig> {
        self.rules
            .iter()
            .map(|&rule| RuleConfig { rule, epsilon: self.epsilon, alpha: self.alpha, beta: self.beta, composite_map: None })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub tau: f64,
    pub permutations: usize,
    /// Split that `explain` and `analyze` work on.
    pub split: SplitName,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, permutations: DEFAULT_PERMUTATIONS, split: SplitName::Test }
    }
}

impl PipelineConfig {
    /// Reads `path`, or returns defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    pub fn architecture(&self) -> Result<Architecture> {
        self.architecture.parse()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    /// Checks every section and that referenced input paths exist.
    pub fn validate(&self) -> Result<()> {
        self.dsp.validate()?;
        self.architecture()?;
        self.train_config().validate()?;
        SplitCounts::from_fractions(100, self.split.validation, self.split.test)?;
        if self.lrp.rules.is_empty() {
            return Err(Error::Config("lrp.rules is empty".into()));
        }
        for r in self.lrp.rule_configs() {
            r.validate()?;
        }
        if !(self.analysis.tau > 0.0 && self.analysis.tau < 1.0) {
            return Err(Error::Config(format!("analysis.tau must lie in (0, 1), got {}", self.analysis.tau)));
        }
        if self.analysis.permutations == 0 {
            return Err(Error::Config("analysis.permutations must be at least 1".into()));
        }
        if !(self.synth.noise_s > 0.0) {
            return Err(Error::Config(format!("synth.noise_s must be positive, got {}", self.synth.noise_s)));
        }
        for (name, p) in [("manifest", &self.paths.manifest), ("noise", &self.paths.noise), ("tracks", &self.paths.tracks)] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!("paths.{name}: {} does not exist", p.display())));
                }
            }
        }
        if self.paths.out_dir.as_os_str().is_empty() {
            return Err(Error::Config("paths.out_dir is empty".into()));
        }
        Ok(())
    }
}
