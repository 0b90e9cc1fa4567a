use std::fmt;

use serde::{Deserialize, Serialize};

use super::tracks::{FeatureTrack, TrackFrame};
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    F0,
    F1,
    F2,
    F3,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::F0, Feature::F1, Feature::F2, Feature::F3];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::F0 => "F0",
            Feature::F1 => "F1",
            Feature::F2 => "F2",
            Feature::F3 => "F3",
        }
    }

    /// Center and bandwidth in one track row.
    fn band(self, row: &TrackFrame) -> Option<(f64, Option<f64>)> {
        match self {
            Feature::F0 => row.f0.map(|c| (c, None)),
            Feature::F1 => row.f1.map(|c| (c, row.b1)),
            Feature::F2 => row.f2.map(|c| (c, row.b2)),
            Feature::F3 => row.f3.map(|c| (c, row.b3)),
        }
    }
}

/// Nonempty subset of {F0, F1, F2, F3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub fn new(features: &[Feature]) -> Result<Self> {
        let bits = features.iter().fold(0, |acc, f| acc | f.bit());
        if bits == 0 {
            return Err(Error::Config("feature subset must not be empty".into()));
        }
        Ok(Self(bits))
    }

    pub fn single(f: Feature) -> Self {
        Self(f.bit())
    }

    /// All 15 nonempty subsets, singletons first.
    pub fn all() -> Vec<FeatureSet> {
        let mut v: Vec<FeatureSet> = (1u8..16).map(FeatureSet).collect();
        v.sort_by_key(|s| (s.0.count_ones(), s.0));
        v
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn features(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |&f| self.contains(f))
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.features().map(Feature::as_str).collect();
        f.write_str(&names.join("+"))
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let feats = s
            .split(['+', ','])
            .map(|p| match p.trim().to_ascii_uppercase().as_str() {
                "F0" => Ok(Feature::F0),
                "F1" => Ok(Feature::F1),
                "F2" => Ok(Feature::F2),
                "F3" => Ok(Feature::F3),
                other => Err(Error::Config(format!("unknown feature `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureSet::new(&feats)
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A `bins x frames` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_bins: usize,
    pub n_frames: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn zeros(n_bins: usize, n_frames: usize) -> Self {
        Self { n_bins, n_frames, values: vec![0.0; n_bins * n_frames] }
    }

    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        self.values[bin * self.n_frames + frame]
    }

    pub fn set(&mut self, bin: usize, frame: usize, v: f64) {
        self.values[bin * self.n_frames + frame] = v;
    }

    /// Cell-wise maximum of two same-shaped grids.
    pub fn max_with(&mut self, other: &Grid) {
        self.values.iter_mut().zip(&other.values).for_each(|(a, &b)| *a = a.max(b));
    }
}

/// Bin range `[lo, hi]` covered by a band, clamped to the grid.
pub fn band_bins(center: f64, bandwidth: f64, bin_hz: f64, n_bins: usize) -> Option<(usize, usize)> {
    let lo = ((center - bandwidth / 2.0) / bin_hz - 1e-9).ceil().max(0.0);
    let hi = ((center + bandwidth / 2.0) / bin_hz + 1e-9).floor().min(n_bins as f64 - 1.0);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Nearest bin to `center` and one bin either side.
fn f0_bins(center: f64, bin_hz: f64, n_bins: usize) -> (usize, usize) {
    let k = ((center / bin_hz).round() as usize).min(n_bins - 1);
    (k.saturating_sub(1), (k + 1).min(n_bins - 1))
}

/// Per-frame intensity clamped at 0 dB and divided by its maximum.
pub fn normalized_intensity(rows: &[&TrackFrame]) -> Vec<f64> {
    let db: Vec<f64> = rows.iter().map(|r| r.intensity_db.unwrap_or(0.0).max(0.0)).collect();
    let max = db.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0.0; db.len()];
    }
    db.iter().map(|d| d / max).collect()
}

/// Feature-specific heatmap: inside each feature's band, magnitude over
/// the band's per-frame maximum, scaled by normalized frame intensity;
/// cell-wise maximum across the subset.
pub fn feature_heatmap(track: &FeatureTrack, subset: FeatureSet, spec: &Spectrogram) -> Result<Grid> {
    if spec.normalized {
        return Err(Error::validation("spectrogram", "feature heatmaps need raw magnitudes, not z-scored values"));
    }
    let g = spec.geometry;
    let rows = track.aligned(&g)?;
    let intensity = normalized_intensity(&rows);
    let mut out = Grid::zeros(g.n_bins, g.n_frames);
    for (k, row) in rows.iter().enumerate() {
        if intensity[k] == 0.0 {
            continue;
        }
        for feat in subset.features() {
            let Some((center, bw)) = feat.band(row) else { continue };
            let range = match (feat, bw) {
                (Feature::F0, _) => Some(f0_bins(center, g.bin_hz, g.n_bins)),
                (_, Some(bw)) => band_bins(center, bw, g.bin_hz, g.n_bins),
                (_, None) => None,
            };
            let Some((lo, hi)) = range else { continue };
            let peak = (lo..=hi).map(|b| spec.at(b, k)).fold(0.0, f64::max);
            if peak <= 0.0 {
                continue;
            }
            for b in lo..=hi {
                let v = spec.at(b, k) / peak * intensity[k];
                if v > out.at(b, k) {
                    out.set(b, k, v);
                }
            }
        }
    }
    Ok(out)
}
