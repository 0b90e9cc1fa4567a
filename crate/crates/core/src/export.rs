//! Writing relevance maps and heatmaps: CSV grids and 8-bit grayscale PNGs
//! with a JSON sidecar holding the min-max scaling bounds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::Grid;
use crate::error::{Error, Result};
use crate::lrp::RelevanceMap;

/// Scaling used for a PNG: pixel = round(255 * (v - min) / (max - min)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub min: f64,
    pub max: f64,
    pub n_bins: usize,
    pub n_frames: usize,
    /// Image row 0 is the highest frequency bin.
    pub origin: String,
}

impl From<&RelevanceMap> for Grid {
    fn from(m: &RelevanceMap) -> Self {
        Grid { n_bins: m.n_bins(), n_frames: m.n_frames(), values: m.grid() }
    }
}

/// One row per bin, one column per frame, with a header row.
pub fn write_grid_csv(path: &Path, grid: &Grid) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        write!(w, "bin")?;
        for f in 0..grid.n_frames {
            write!(w, ",frame_{f}")?;
        }
        writeln!(w)?;
        for b in 0..grid.n_bins {
            write!(w, "{b}")?;
            for f in 0..grid.n_frames {
                write!(w, ",{}", grid.at(b, f))?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a grid written by [`write_grid_csv`].
pub fn read_grid_csv(path: &Path) -> Result<Grid> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let n_frames = reader.headers().map_err(|e| csv_error(path, e))?.len().saturating_sub(1);
    let mut values = Vec::new();
    let mut n_bins = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != n_frames + 1 {
            return Err(Error::Ingest { row: row + 1, message: format!("{} has {} fields, expected {}", path.display(), record.len(), n_frames + 1) });
        }
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Ingest { row: row + 1, message: format!("{}: `{field}` is not a number", path.display()) })?;
            values.push(v);
        }
        n_bins += 1;
    }
    Ok(Grid { n_bins, n_frames, values })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// 8-bit grayscale pixels (row 0 = top = highest bin) and their bounds.
pub fn grid_to_gray(grid: &Grid) -> (Vec<u8>, ImageSidecar) {
    let min = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut pixels = Vec::with_capacity(grid.values.len());
    for b in (0..grid.n_bins).rev() {
        for f in 0..grid.n_frames {
            let v = if span > 0.0 { (grid.at(b, f) - min) / span } else { 0.0 };
            pixels.push((255.0 * v).round().clamp(0.0, 255.0) as u8);
        }
    }
    let side = ImageSidecar { min, max, n_bins: grid.n_bins, n_frames: grid.n_frames, origin: "upper=high_frequency".into() };
    (pixels, side)
}

/// Writes `path` (PNG) and `path` with a `.json` extension (bounds).
pub fn write_grid_png(path: &Path, grid: &Grid) -> Result<ImageSidecar> {
    let (pixels, side) = grid_to_gray(grid);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), grid.n_frames as u32, grid.n_bins as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::io(path, std::io::Error::other(e.to_string()));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&pixels).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    let side_path = path.with_extension("json");
    let text = serde_json::to_string_pretty(&side).map_err(|e| Error::json(side_path.display().to_string(), e))?;
    std::fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))?;
    Ok(side)
}

/// CSV plus PNG (and sidecar) for a relevance map, sharing `stem`.
pub fn export_relevance(dir: &Path, stem: &str, map: &RelevanceMap) -> Result<ImageSidecar> {
    let grid = Grid::from(map);
    write_grid_csv(&dir.join(format!("{stem}.csv")), &grid)?;
    write_grid_png(&dir.join(format!("{stem}.png")), &grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        let g = Grid { n_bins: 2, n_frames: 3, values: vec![0.1, -2.5e-17, 3.0, f64::MIN_POSITIVE, 1.0 / 3.0, -7.0] };
        write_grid_csv(&p, &g).unwrap();
        assert_eq!(read_grid_csv(&p).unwrap(), g);
    }

    fn grid() -> Grid {
        Grid { n_bins: 3, n_frames: 2, values: vec![-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] }
    }

    #[test]
    fn gray_scaling_is_min_max_with_high_bins_on_top() {
        let (px, side) = grid_to_gray(&grid());
        assert_eq!((side.min, side.max), (-1.0, 3.0));
        assert_eq!(px, vec![191, 255, 96, 128, 0, 64]);
    }

    #[test]
    fn constant_grid_is_black() {
        let g = Grid { n_bins: 2, n_frames: 2, values: vec![4.0; 4] };
        assert_eq!(grid_to_gray(&g).0, vec![0; 4]);
    }

    #[test]
    fn png_is_deterministic_and_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        write_grid_png(&a, &grid()).unwrap();
        write_grid_png(&b, &grid()).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let dec = png::Decoder::new(File::open(&a).unwrap());
        let mut reader = dec.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (2, 3));
        assert_eq!(&buf[..6], &grid_to_gray(&grid()).0[..]);
        let side: ImageSidecar = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
        assert_eq!(side.max, 3.0);
    }

    #[test]
    fn csv_has_header_and_one_row_per_bin() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        write_grid_csv(&p, &grid()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin,frame_0,frame_1");
        assert_eq!(lines[1], "0,-1,0");
        assert_eq!(lines.len(), 4);
    }
}
