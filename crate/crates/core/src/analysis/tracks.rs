use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AudioClip, SynthTruth};
use crate::dsp::FrameGeometry;
use crate::error::{Error, Result};

/// Nominal third formant written into synthetic truth tracks; the
/// generator only shapes two formants, so this band holds no vowel energy.
pub const SYNTH_F3_HZ: f64 = 2500.0;
pub const SYNTH_B3_HZ: f64 = 250.0;
/// Reference pressure for intensity in dB (samples read as pascals).
const DB_REF: f64 = 2e-5;

/// One row of a feature track file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub time_s: f64,
    #[serde(rename = "F0")]
    pub f0: Option<f64>,
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
    #[serde(rename = "B1")]
    pub b1: Option<f64>,
    #[serde(rename = "F2")]
    pub f2: Option<f64>,
    #[serde(rename = "B2")]
    pub b2: Option<f64>,
    #[serde(rename = "F3")]
    pub f3: Option<f64>,
    #[serde(rename = "B3")]
    pub b3: Option<f64>,
    pub intensity_db: Option<f64>,
}

impl TrackFrame {
    pub fn unvoiced(time_s: f64, intensity_db: f64) -> Self {
        Self { time_s, f0: None, f1: None, b1: None, f2: None, b2: None, f3: None, b3: None, intensity_db: Some(intensity_db) }
    }

    /// Formant `k` (1..=3) center and bandwidth.
    pub fn formant(&self, k: usize) -> (Option<f64>, Option<f64>) {
        match k {
            1 => (self.f1, self.b1),
            2 => (self.f2, self.b2),
            3 => (self.f3, self.b3),
            _ => (None, None),
        }
    }
}

/// Pitch, formant and intensity tracks of one word, one row per analysis
/// frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureTrack {
    pub frames: Vec<TrackFrame>,
}

impl FeatureTrack {
    pub fn new(frames: Vec<TrackFrame>) -> Result<Self> {
        let t = Self { frames };
        t.validate(f64::INFINITY)?;
        Ok(t)
    }

    /// Centers below `nyquist_hz`, bandwidths positive where centers exist,
    /// times non-decreasing.
    pub fn validate(&self, nyquist_hz: f64) -> Result<()> {
        for (i, f) in self.frames.iter().enumerate() {
            let row = i + 1;
            if !f.time_s.is_finite() || (i > 0 && f.time_s < self.frames[i - 1].time_s) {
                return Err(Error::validation("time_s", format!("row {row}: times must be finite and non-decreasing")));
            }
            let centers = [("F0", f.f0), ("F1", f.f1), ("F2", f.f2), ("F3", f.f3)];
            for (name, c) in centers {
                if let Some(c) = c {
                    if !(c > 0.0 && c <= nyquist_hz) {
                        return Err(Error::validation(name, format!("row {row}: {c} Hz outside (0, {nyquist_hz}]")));
                    }
                }
            }
            for (k, name) in [(1, "B1"), (2, "B2"), (3, "B3")] {
                if let (Some(_), b) = f.formant(k) {
                    if !matches!(b, Some(b) if b > 0.0) {
                        return Err(Error::validation(name, format!("row {row}: bandwidth must be > 0 where F{k} is present")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Row nearest in time to `t`.
    pub fn nearest(&self, t: f64) -> Option<&TrackFrame> {
        let i = self.frames.partition_point(|f| f.time_s < t);
        let cand = [i.checked_sub(1), Some(i)];
        cand.into_iter()
            .flatten()
            .filter_map(|j| self.frames.get(j))
            .min_by(|a, b| (a.time_s - t).abs().total_cmp(&(b.time_s - t).abs()))
    }

    /// Track row for each spectrogram frame (nearest to the frame center).
    pub fn aligned(&self, geometry: &FrameGeometry) -> Result<Vec<&TrackFrame>> {
        if self.frames.is_empty() {
            return Err(Error::validation("track", "feature track has no rows"));
        }
        Ok((0..geometry.n_frames).map(|k| self.nearest(geometry.frame_center(k)).expect("non-empty")).collect())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut frames = Vec::new();
        for (i, rec) in rdr.deserialize::<TrackFrame>().enumerate() {
            let frame = rec.map_err(|e| Error::Ingest { row: i + 1, message: e.to_string() })?;
            frames.push(frame);
        }
        Self::new(frames)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        for f in &self.frames {
            w.serialize(f).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Ground-truth track of a synthetic token at the frame centers of
    /// `geometry`: F0, F1, F2 inside the vowels (bandwidth = the envelope's
    /// full width at half maximum), a nominal F3, and the clip's
    /// frame intensity.
    pub fn from_synthetic(truth: &SynthTruth, geometry: &FrameGeometry) -> Self {
        let fwhm = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
        let frames = (0..geometry.n_frames)
            .map(|k| {
                let t = geometry.frame_center(k);
                let db = frame_intensity_db(&truth.clip, k as f64 * geometry.hop_s, geometry.window_s);
                match truth.vowels.iter().find(|v| t >= v.start && t < v.end) {
                    Some(v) => TrackFrame {
                        time_s: t,
                        f0: Some(v.f0_hz),
                        f1: Some(v.formant_hz[0]),
                        b1: Some(fwhm * v.formant_width_hz[0]),
                        f2: Some(v.formant_hz[1]),
                        b2: Some(fwhm * v.formant_width_hz[1]),
                        f3: Some(SYNTH_F3_HZ),
                        b3: Some(SYNTH_B3_HZ),
                        intensity_db: Some(db),
                    },
                    None => TrackFrame::unvoiced(t, db),
                }
            })
            .collect();
        Self { frames }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// RMS level of `[start, start + window)` in dB re 2e-5.
pub fn frame_intensity_db(clip: &AudioClip, start: f64, window: f64) -> f64 {
    let rms = clip.rms_between(start, start + window);
    if rms <= 0.0 {
        return 0.0;
    }
    20.0 * (rms / DB_REF).log10()
}
