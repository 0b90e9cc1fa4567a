use serde::{Deserialize, Serialize};

use crate::corpus::{Alignment, Phone, Stress};
use crate::dsp::FrameGeometry;
use crate::error::{Error, Result};
use crate::lrp::RelevanceMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    StressedVowel,
    StressedOther,
    UnstressedVowel,
    UnstressedOther,
    StressedSyllable,
    UnstressedSyllable,
}

impl RegionTag {
    pub const ALL: [RegionTag; 6] = [
        RegionTag::StressedVowel,
        RegionTag::StressedOther,
        RegionTag::UnstressedVowel,
        RegionTag::UnstressedOther,
        RegionTag::StressedSyllable,
        RegionTag::UnstressedSyllable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::StressedVowel => "stressed_vowel",
            RegionTag::StressedOther => "stressed_other",
            RegionTag::UnstressedVowel => "unstressed_vowel",
            RegionTag::UnstressedOther => "unstressed_other",
            RegionTag::StressedSyllable => "stressed_syllable",
            RegionTag::UnstressedSyllable => "unstressed_syllable",
        }
    }
}

/// A time-frequency box list: frame spans `[start, end)` over the bin range
/// `[bins.0, bins.1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub tag: RegionTag,
    pub spans: Vec<(usize, usize)>,
    pub bins: (usize, usize),
}

impl Region {
    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|&(a, b)| a..b)
    }

    pub fn n_frames(&self) -> usize {
        self.spans.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames() == 0 || self.bins.0 >= self.bins.1
    }

    pub fn contains(&self, bin: usize, frame: usize) -> bool {
        (self.bins.0..self.bins.1).contains(&bin) && self.spans.iter().any(|&(a, b)| (a..b).contains(&frame))
    }

    /// `(bin, frame)` cells in bin-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.bins.0..self.bins.1).flat_map(move |b| self.frames().map(move |f| (b, f)))
    }
}

/// The four tiling regions of a disyllable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSet {
    pub stressed_vowel: Region,
    pub stressed_other: Region,
    pub unstressed_vowel: Region,
    pub unstressed_other: Region,
}

impl RegionSet {
    pub fn tiles(&self) -> [&Region; 4] {
        [&self.stressed_vowel, &self.stressed_other, &self.unstressed_vowel, &self.unstressed_other]
    }

    /// Any of the four tiles, or the union of a syllable's two tiles.
    pub fn get(&self, tag: RegionTag) -> Region {
        let union = |a: &Region, b: &Region, tag| {
            let mut spans: Vec<_> = a.spans.iter().chain(&b.spans).copied().filter(|(s, e)| s < e).collect();
            spans.sort_unstable();
            Region { tag, spans, bins: a.bins }
        };
        match tag {
            RegionTag::StressedVowel => self.stressed_vowel.clone(),
            RegionTag::StressedOther => self.stressed_other.clone(),
            RegionTag::UnstressedVowel => self.unstressed_vowel.clone(),
            RegionTag::UnstressedOther => self.unstressed_other.clone(),
            RegionTag::StressedSyllable => union(&self.stressed_vowel, &self.stressed_other, tag),
            RegionTag::UnstressedSyllable => union(&self.unstressed_vowel, &self.unstressed_other, tag),
        }
    }
}

/// Vowel and remainder regions of both syllables, spanning the full band.
pub fn make_regions(alignment: &Alignment, geometry: &FrameGeometry) -> Result<RegionSet> {
    let extent = (geometry.n_frames.saturating_sub(1)) as f64 * geometry.hop_s + geometry.window_s;
    if alignment.word_start < -1e-9 || alignment.word_end > extent + 1e-9 {
        return Err(Error::Range(format!(
            "word [{}, {}] s outside the spectrogram's {extent} s",
            alignment.word_start, alignment.word_end
        )));
    }
    let n = geometry.n_frames;
    let frame = |t: f64| geometry.frame_at(t).min(n);
    let first = (frame(alignment.word_start), frame(alignment.syllable_boundary));
    let second = (frame(alignment.syllable_boundary), frame(alignment.word_end));
    let bins = (0, geometry.n_bins);

    let vowel_span = |v: Option<&Phone>, syl: (usize, usize), which: &str| -> Result<(usize, usize)> {
        let v = v.ok_or_else(|| Error::DegenerateRegion(format!("no vowel in the {which} syllable")))?;
        if v.end - v.start < geometry.hop_s - 1e-9 {
            return Err(Error::DegenerateRegion(format!(
                "{which} vowel {} lasts {:.4} s, shorter than one hop",
                v.label,
                v.end - v.start
            )));
        }
        let (a, b) = (frame(v.start).clamp(syl.0, syl.1), frame(v.end).clamp(syl.0, syl.1));
        if a >= b {
            return Err(Error::DegenerateRegion(format!("{which} vowel covers no frame of its syllable")));
        }
        Ok((a, b))
    };
    let v1 = vowel_span(alignment.initial_vowel(), first, "initial")?;
    let v2 = vowel_span(alignment.final_vowel(), second, "final")?;
    let other = |syl: (usize, usize), v: (usize, usize)| -> Vec<(usize, usize)> {
        [(syl.0, v.0), (v.1, syl.1)].into_iter().filter(|(a, b)| a < b).collect()
    };
    let (sv, so, uv, uo) = match alignment.stress {
        Stress::Initial => (v1, other(first, v1), v2, other(second, v2)),
        Stress::Final => (v2, other(second, v2), v1, other(first, v1)),
    };
    Ok(RegionSet {
        stressed_vowel: Region { tag: RegionTag::StressedVowel, spans: vec![sv], bins },
        stressed_other: Region { tag: RegionTag::StressedOther, spans: so, bins },
        unstressed_vowel: Region { tag: RegionTag::UnstressedVowel, spans: vec![uv], bins },
        unstressed_other: Region { tag: RegionTag::UnstressedOther, spans: uo, bins },
    })
}

/// Inside-total ratio of positive relevance, `R_in / R_tot`.
pub fn iou_mu(map: &RelevanceMap, region: &Region) -> Result<f64> {
    let grid = map.grid();
    let nf = map.n_frames();
    let total: f64 = grid.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedRatio("relevance map has no positive mass".into()));
    }
    if region.bins.1 > map.n_bins() || region.spans.iter().any(|&(_, e)| e > nf) {
        return Err(Error::Range("region exceeds the relevance map".into()));
    }
    let inside: f64 = region.cells().map(|(b, f)| grid[b * nf + f].max(0.0)).sum();
    Ok(inside / total)
}
