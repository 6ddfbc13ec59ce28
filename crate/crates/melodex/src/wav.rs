//! WAV reading and writing.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use melodex_core::AudioClip;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("cannot read `{path}`")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV data: {0}")]
    Malformed(String),
    #[error("unsupported WAV encoding: {0}")]
    Unsupported(String),
    #[error("audio contains no samples")]
    Empty,
    #[error("cannot write WAV: {0}")]
    Write(String),
}

fn from_hound(e: hound::Error) -> WavError {
    match e {
        hound::Error::Unsupported => WavError::Unsupported("only PCM 16/24/32-bit and float 32-bit are read".into()),
        hound::Error::IoError(e) => WavError::Malformed(e.to_string()),
        other => WavError::Malformed(other.to_string()),
    }
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, WavError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| WavError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    read_wav(std::io::BufReader::new(file))
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    read_wav(Cursor::new(bytes))
}

/// Decodes PCM 16/24/32-bit or float-32 WAV, mixing down to mono. Integer
/// samples are scaled by `1 / 2^(bits - 1)`.
pub fn read_wav<R: Read + Seek>(reader: R) -> Result<AudioClip, WavError> {
    let reader = WavReader::new(reader).map_err(from_hound)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(from_hound)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(from_hound)?
        }
        (fmt, bits) => {
            return Err(WavError::Unsupported(format!("{fmt:?} {bits}-bit")));
        }
    };
    if interleaved.is_empty() {
        return Err(WavError::Empty);
    }
    AudioClip::from_interleaved(&interleaved, spec.channels as usize, spec.sample_rate)
        .map_err(|e| WavError::Malformed(e.to_string()))
}

/// 16-bit little-endian PCM, samples scaled by 32768 and clamped.
pub fn encode_wav(clip: &AudioClip) -> Result<Vec<u8>, WavError> {
    let mut buf = Cursor::new(Vec::new());
    write_pcm16(clip, &mut buf)?;
    Ok(buf.into_inner())
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), WavError> {
    let file = std::fs::File::create(path.as_ref()).map_err(|e| WavError::Write(e.to_string()))?;
    write_pcm16(clip, std::io::BufWriter::new(file))
}

fn write_pcm16<W: Write + Seek>(clip: &AudioClip, out: W) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let err = |e: hound::Error| WavError::Write(e.to_string());
    let mut w = WavWriter::new(out, spec).map_err(err)?;
    for &s in clip.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(err)?;
    }
    w.finalize().map_err(err)
}

/// 32-bit float WAV; lossless for corpus audio.
pub fn write_wav_f32(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let err = |e: hound::Error| WavError::Write(e.to_string());
    let mut w = WavWriter::create(path.as_ref(), spec).map_err(err)?;
    for &s in clip.samples() {
        w.write_sample(s as f32).map_err(err)?;
    }
    w.finalize().map_err(err)
}
