use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

const FULL_SCALE: f64 = 32768.0;

/// Reads a mono 16-bit PCM WAV file. Other encodings are rejected.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::validation(
            "audio",
            format!(
                "{}: expected mono 16-bit PCM, found {} channel(s), {} bits, {:?}",
                path.display(),
                spec.channels,
                spec.bits_per_sample,
                spec.sample_format
            ),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes a clip as mono 16-bit PCM. Values read back by [`read_wav`] are
/// reproduced exactly once quantized.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in clip.samples() {
        let q = (s * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::validation("audio", format!("{}: {other}", path.display())),
    }
}
