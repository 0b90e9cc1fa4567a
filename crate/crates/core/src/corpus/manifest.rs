use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{extract_word_window, read_wav, word_type_of, Alignment, AugmentationTag, Sample, SplitName};
use crate::error::{Error, Result};
use crate::{par, WORD_WINDOW_S};

/// One line of a JSON-lines manifest. Paths are resolved relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub audio_path: String,
    pub alignment_path: String,
    pub word_type: String,
    pub source_id: String,
    #[serde(default, skip_serializing_if = "is_none_tag")]
    pub augmentation_tag: AugmentationTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
}

fn is_none_tag(t: &AugmentationTag) -> bool {
    *t == AugmentationTag::None
}

/// Loads every row of a manifest as a 0.5 s word-window [`Sample`].
pub fn load_manifest(path: &Path) -> Result<Vec<Sample>> {
    Ok(load_manifest_entries(path, WORD_WINDOW_S)?.into_iter().map(|(_, s)| s).collect())
}

/// Like [`load_manifest`] but keeps each row next to its sample and lets
/// the caller pick the window length.
pub fn load_manifest_entries(path: &Path, window_s: f64) -> Result<Vec<(ManifestRow, Sample)>> {
    let rows = read_rows(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let indexed: Vec<(usize, ManifestRow)> = rows.into_iter().enumerate().collect();
    par::map(&indexed, |(i, row)| load_row(&base, *i + 1, row, window_s).map(|s| (row.clone(), s)))
        .into_iter()
        .collect()
}

fn read_rows(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Ingest { row: i + 1, message: format!("malformed row: {e}") })
        })
        .collect()
}

fn load_row(base: &Path, row: usize, r: &ManifestRow, window_s: f64) -> Result<Sample> {
    let audio = resolve(base, &r.audio_path);
    let align = resolve(base, &r.alignment_path);
    for p in [&audio, &align] {
        if !p.exists() {
            return Err(Error::Ingest { row, message: format!("missing file {}", p.display()) });
        }
    }
    let clip = read_wav(&audio)?;
    let text = fs::read_to_string(&align).map_err(|e| Error::io(&align, e))?;
    let alignment: Alignment =
        serde_json::from_str(&text).map_err(|e| Error::json(align.display().to_string(), e))?;
    alignment.validate()?;
    let window = extract_word_window(&clip, &alignment, window_s)?;
    let rebased = alignment.rebased(alignment.word_start, window_s);
    Sample::new(window, rebased, word_type_of(&r.word_type), r.source_id.clone(), r.augmentation_tag)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Writes rows as JSON lines.
pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::json("manifest row", e))?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
