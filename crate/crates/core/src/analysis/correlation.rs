use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::heatmap::Grid;
use super::regions::Region;
use crate::error::{Error, Result};
use crate::lrp::RelevanceMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    /// Permutation p-value, `(1 + #{|r_perm| >= |r|}) / (1 + permutations)`.
    pub p: f64,
}

/// Pearson correlation coefficient; `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r between raw relevance and a feature heatmap over the cells of
/// `region`, with a seeded permutation p-value.
pub fn correlate_region(map: &RelevanceMap, feat: &Grid, region: &Region, permutations: usize, seed: u64) -> Result<CorrelationResult> {
    if (map.n_bins(), map.n_frames()) != (feat.n_bins, feat.n_frames) {
        return Err(Error::shape("heatmap", format!("relevance is {}x{}, heatmap {}x{}", map.n_bins(), map.n_frames(), feat.n_bins, feat.n_frames)));
    }
    if region.is_empty() {
        return Err(Error::DegenerateRegion(format!("{} region is empty", region.tag.as_str())));
    }
    let grid = map.grid();
    let nf = map.n_frames();
    let (x, mut y): (Vec<f64>, Vec<f64>) = region.cells().map(|(b, f)| (grid[b * nf + f], feat.at(b, f))).unzip();
    let r = pearson(&x, &y).ok_or_else(|| Error::DegenerateCorrelation(format!("zero variance inside the {} region", region.tag.as_str())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..permutations {
        y.shuffle(&mut rng);
        let rp = pearson(&x, &y).expect("permutation keeps the variance");
        if rp.abs() >= r.abs() {
            hits += 1;
        }
    }
    Ok(CorrelationResult { r, p: (1 + hits) as f64 / (1 + permutations) as f64 })
}
