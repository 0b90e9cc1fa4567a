use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainHistory};
use crate::error::{Error, Result};
use crate::nn::{load_weights, save_weights, NetworkSpec};

/// JSON sidecar stored next to the weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Architecture name the network was built from, if any.
    #[serde(default)]
    pub architecture: Option<String>,
    pub config: TrainConfig,
    /// Epoch whose weights are stored (1-based; 0 = untrained).
    pub epoch: usize,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: NetworkSpec,
    pub meta: CheckpointMeta,
}

fn sidecar(weights: &Path) -> PathBuf {
    weights.with_extension("json")
}

/// Writes `weights` (binary) and its `.json` sidecar.
pub fn save_checkpoint(weights: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = weights.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_weights(&ckpt.net, weights)?;
    let path = sidecar(weights);
    let text = serde_json::to_string_pretty(&ckpt.meta).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(weights: &Path) -> Result<Checkpoint> {
    if !weights.exists() {
        return Err(Error::Dependency {
            path: weights.to_path_buf(),
            hint: "run `stresslrp train` first or pass --checkpoint".into(),
        });
    }
    let net = load_weights(weights)?;
    let path = sidecar(weights);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    Ok(Checkpoint { net, meta })
}
