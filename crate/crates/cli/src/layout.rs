//! Where each command reads and writes under the output directory.

use std::path::{Path, PathBuf};

use stresslrp::lrp::Rule;

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn synth_dir(&self) -> PathBuf {
        self.root.join("synth")
    }

    pub fn synth_manifest(&self) -> PathBuf {
        self.synth_dir().join("manifest.jsonl")
    }

    pub fn synth_noise(&self) -> PathBuf {
        self.synth_dir().join("noise.wav")
    }

    pub fn synth_tracks(&self) -> PathBuf {
        self.synth_dir().join("tracks")
    }

    pub fn data_manifest(&self) -> PathBuf {
        self.root.join("data").join("manifest.jsonl")
    }

    pub fn split_counts(&self) -> PathBuf {
        self.root.join("data").join("splits.csv")
    }

    pub fn augmented_dir(&self) -> PathBuf {
        self.root.join("augmented")
    }

    pub fn augmented_manifest(&self) -> PathBuf {
        self.augmented_dir().join("manifest.jsonl")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("model").join("model.bin")
    }

    pub fn history(&self) -> PathBuf {
        self.root.join("model").join("history.csv")
    }

    pub fn accuracy(&self) -> PathBuf {
        self.root.join("eval").join("accuracy.csv")
    }

    pub fn explain_dir(&self, rule: Rule) -> PathBuf {
        self.root.join("explain").join(rule.as_str())
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.root.join("analysis")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}
