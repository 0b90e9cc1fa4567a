//! Quantitative reading of relevance maps: region overlap ratios,
//! feature-specific heatmaps, permutation-tested correlation and the band
//! distribution of unexplained relevance.

mod correlation;
mod heatmap;
mod regions;
mod residual;
mod tracks;

pub use correlation::{correlate_region, pearson, CorrelationResult};
pub use heatmap::{band_bins, feature_heatmap, normalized_intensity, Feature, FeatureSet, Grid};
pub use regions::{iou_mu, make_regions, Region, RegionSet, RegionTag};
pub use residual::{band_of, residual_distribution, ResidualBands, BAND_NAMES};
pub use tracks::{frame_intensity_db, FeatureTrack, TrackFrame, SYNTH_B3_HZ, SYNTH_F3_HZ};

use serde::{Deserialize, Serialize};

use crate::corpus::mix_seed;
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::lrp::RelevanceMap;
use crate::par;

/// Default residual threshold as a fraction of the regional maximum.
pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_PERMUTATIONS: usize = 1000;

/// One sample's inputs to the feature correlation analysis.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisItem<'a> {
    pub map: &'a RelevanceMap,
    /// Raw magnitude spectrogram.
    pub spectrogram: &'a Spectrogram,
    pub track: &'a FeatureTrack,
    pub region: &'a Region,
}

/// Mean correlation of one feature subset across samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset: FeatureSet,
    pub mean_r: f64,
    pub mean_p: f64,
    /// Samples that produced a correlation.
    pub n: usize,
    /// Samples skipped for zero variance inside the region.
    pub skipped: usize,
}

/// Scores all 15 feature subsets and sorts them by mean r, highest first.
pub fn rank_feature_subsets(items: &[AnalysisItem<'_>], permutations: usize, seed: u64) -> Result<Vec<SubsetScore>> {
    if items.is_empty() {
        return Err(Error::Config("no samples to analyse".into()));
    }
    let subsets = FeatureSet::all();
    let per_item: Vec<Result<Vec<Option<CorrelationResult>>>> = par::map_indexed(items.len(), |i| {
        let it = &items[i];
        subsets
            .iter()
            .enumerate()
            .map(|(s, &subset)| {
                let feat = feature_heatmap(it.track, subset, it.spectrogram)?;
                match correlate_region(it.map, &feat, it.region, permutations, mix_seed(seed, (i * 16 + s) as u64)) {
                    Ok(c) => Ok(Some(c)),
                    Err(Error::DegenerateCorrelation(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect()
    });
    let per_item = per_item.into_iter().collect::<Result<Vec<_>>>()?;
    let mut scores: Vec<SubsetScore> = subsets
        .iter()
        .enumerate()
        .map(|(s, &subset)| {
            let got: Vec<CorrelationResult> = per_item.iter().filter_map(|v| v[s]).collect();
            let n = got.len();
            let mean = |f: fn(&CorrelationResult) -> f64| if n == 0 { f64::NAN } else { got.iter().map(f).sum::<f64>() / n as f64 };
            SubsetScore { subset, mean_r: mean(|c| c.r), mean_p: mean(|c| c.p), n, skipped: items.len() - n }
        })
        .collect();
    scores.sort_by(|a, b| match (a.mean_r.is_nan(), b.mean_r.is_nan()) {
        (false, false) => b.mean_r.total_cmp(&a.mean_r),
        (x, y) => x.cmp(&y),
    });
    Ok(scores)
}

/// Mean of `values`, `None` when empty.
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
