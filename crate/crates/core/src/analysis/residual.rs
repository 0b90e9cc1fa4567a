use serde::{Deserialize, Serialize};

use super::heatmap::Grid;
use super::regions::Region;
use super::tracks::{FeatureTrack, TrackFrame};
use crate::dsp::FrameGeometry;
use crate::error::{Error, Result};
use crate::lrp::RelevanceMap;

/// Frequency bands residual relevance is assigned to.
pub const BAND_NAMES: [&str; 4] = ["F0-F1", "F1-F2", "F2-F3", "above_F3"];

/// Share of unexplained relevance per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualBands {
    /// Indexed like [`BAND_NAMES`]; all zero when `cells == 0`.
    pub fractions: [f64; 4],
    pub mass: f64,
    pub cells: usize,
}

impl ResidualBands {
    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }
}

/// Band index of `freq` given a frame's F1..F3 (cells below F0 count as
/// F0-F1).
pub fn band_of(freq: f64, formants: [f64; 3]) -> usize {
    formants.iter().position(|&f| freq < f).unwrap_or(3)
}

/// Distributes positive relevance that `combined` leaves unexplained
/// (feature value at most `tau` times its regional maximum) over the
/// formant bands of each frame.
pub fn residual_distribution(
    map: &RelevanceMap,
    combined: &Grid,
    track: &FeatureTrack,
    region: &Region,
    tau: f64,
    geometry: &FrameGeometry,
) -> Result<ResidualBands> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1), got {tau}")));
    }
    if (map.n_bins(), map.n_frames()) != (combined.n_bins, combined.n_frames) || geometry.n_frames != map.n_frames() {
        return Err(Error::shape("heatmap", "relevance map, feature heatmap and geometry disagree"));
    }
    let rows = track.aligned(geometry)?;
    let fallback = region_formants(&rows, region)?;
    let grid = map.grid();
    let nf = map.n_frames();
    let max = region.cells().map(|(b, f)| combined.at(b, f)).fold(0.0, f64::max);
    let mut mass = [0.0; 4];
    let mut cells = 0;
    for (b, f) in region.cells() {
        let r = grid[b * nf + f].max(0.0);
        if r <= 0.0 || combined.at(b, f) > tau * max {
            continue;
        }
        let row = rows[f];
        let formants = [1, 2, 3].map(|k| row.formant(k).0.unwrap_or(fallback[k - 1]));
        mass[band_of(geometry.bin_freq(b), formants)] += r;
        cells += 1;
    }
    let total: f64 = mass.iter().sum();
    let fractions = if total > 0.0 { mass.map(|m| m / total) } else { [0.0; 4] };
    Ok(ResidualBands { fractions, mass: total, cells })
}

/// Median F1..F3 over the region's frames, used where a frame lacks one.
fn region_formants(rows: &[&TrackFrame], region: &Region) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for k in 1..=3 {
        let mut vals: Vec<f64> = region.frames().filter_map(|f| rows.get(f).and_then(|r| r.formant(k).0)).collect();
        if vals.is_empty() {
            return Err(Error::validation(format!("F{k}"), format!("no F{k} value inside the {} region", region.tag.as_str())));
        }
        vals.sort_by(f64::total_cmp);
        out[k - 1] = vals[vals.len() / 2];
    }
    Ok(out)
}
