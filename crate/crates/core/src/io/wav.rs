//! WAV audio: 16-bit PCM or 32-bit float, one or two channels.

use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::IoError;
use crate::renderer::{AudioBuffer, SUPPORTED_SAMPLE_RATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Float32,
    Pcm16,
}

fn map_hound(path: &Path, err: hound::Error) -> IoError {
    match err {
        hound::Error::IoError(e) => IoError::io(path, e),
        hound::Error::FormatError(m) => IoError::CorruptHeader(path.to_path_buf(), m.to_string()),
        hound::Error::Unsupported => IoError::UnsupportedEncoding(path.to_path_buf(), "unsupported WAV layout".into()),
        other => IoError::CorruptHeader(path.to_path_buf(), other.to_string()),
    }
}

/// Reads a WAV file. PCM16 samples are scaled by `1 / 32768`.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    // the file is readable, so any read failure from here on means a malformed stream
    let corrupt = |e: hound::Error| match e {
        hound::Error::IoError(e) => IoError::CorruptHeader(path.to_path_buf(), e.to_string()),
        other => map_hound(path, other),
    };
    let mut reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(corrupt)?;
    let spec = reader.spec();
    let unsupported = |m: String| IoError::UnsupportedEncoding(path.to_path_buf(), m);
    if !(1..=2).contains(&spec.channels) {
        return Err(unsupported(format!("{} channels", spec.channels)));
    }
    if !SUPPORTED_SAMPLE_RATES.contains(&spec.sample_rate) {
        return Err(unsupported(format!("sample rate {} Hz", spec.sample_rate)));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|x| f64::from(x) / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(corrupt)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(corrupt)?,
        (fmt, bits) => return Err(unsupported(format!("{fmt:?} with {bits} bits per sample"))),
    };
    let channels = spec.channels as usize;
    let per_channel = (0..channels)
        .map(|c| interleaved.iter().skip(c).step_by(channels).copied().collect())
        .collect();
    AudioBuffer::new(per_channel, spec.sample_rate)
        .map_err(|e| IoError::CorruptHeader(path.to_path_buf(), e.to_string()))
}

/// Writes a WAV file. PCM16 output is rounded and clipped to the 16-bit range.
pub fn write_wav(path: &Path, audio: &AudioBuffer, encoding: WavEncoding) -> Result<(), IoError> {
    let spec = WavSpec {
        channels: audio.channel_count() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Float32 => 32,
            WavEncoding::Pcm16 => 16,
        },
        sample_format: match encoding {
            WavEncoding::Float32 => SampleFormat::Float,
            WavEncoding::Pcm16 => SampleFormat::Int,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for i in 0..audio.len() {
        for c in audio.channels() {
            let x = c[i];
            let res = match encoding {
                WavEncoding::Float32 => writer.write_sample(x as f32),
                WavEncoding::Pcm16 => writer.write_sample((x * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            };
            res.map_err(|e| map_hound(path, e))?;
        }
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}
