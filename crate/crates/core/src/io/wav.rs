use std::fs::File;
use std::io::{BufReader, ErrorKind, Read, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::{write_atomic, IoError};
use crate::numerics::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitDepth {
    #[default]
    Float32,
    Int24,
    Int16,
}

impl BitDepth {
    fn spec(self) -> (u16, SampleFormat) {
        match self {
            BitDepth::Float32 => (32, SampleFormat::Float),
            BitDepth::Int24 => (24, SampleFormat::Int),
            BitDepth::Int16 => (16, SampleFormat::Int),
        }
    }
}

/// Samples × channels audio, integers normalized to `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFile {
    pub sample_rate: u32,
    pub samples: DataMatrix,
    pub bit_depth: BitDepth,
}

impl AudioFile {
    pub fn new(sample_rate: u32, samples: DataMatrix, bit_depth: BitDepth) -> Self {
        Self { sample_rate, samples, bit_depth }
    }

    pub fn channels(&self) -> usize {
        self.samples.cols()
    }
}

// hound reports a short read as `Other` rather than `UnexpectedEof`.
fn short_read(e: &std::io::Error) -> bool {
    matches!(e.kind(), ErrorKind::UnexpectedEof | ErrorKind::Other)
}

fn header_error(path: &Path, e: hound::Error) -> IoError {
    let path = path.to_path_buf();
    match e {
        hound::Error::Unsupported => IoError::UnsupportedCodec { path, reason: "codec not supported".into() },
        hound::Error::IoError(io) if short_read(&io) => {
            IoError::MalformedHeader { path, reason: "file ends inside the header".into() }
        }
        hound::Error::IoError(io) => IoError::Io { path, source: io },
        other => IoError::MalformedHeader { path, reason: other.to_string() },
    }
}

fn data_error(path: &Path, e: hound::Error) -> IoError {
    let path = path.to_path_buf();
    match e {
        hound::Error::IoError(io) if short_read(&io) => {
            IoError::TruncatedData { path, reason: "data chunk shorter than declared".into() }
        }
        hound::Error::IoError(io) => IoError::Io { path, source: io },
        hound::Error::UnfinishedSample => IoError::TruncatedData { path, reason: "partial sample frame".into() },
        other => IoError::MalformedHeader { path, reason: other.to_string() },
    }
}

/// Reads 16/24-bit PCM or 32-bit float WAV, including WAVE_FORMAT_EXTENSIBLE.
pub fn read_wav(path: &Path) -> Result<AudioFile, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| header_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(IoError::MalformedHeader { path: path.into(), reason: "zero channels".into() });
    }
    let bit_depth = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => BitDepth::Float32,
        (SampleFormat::Int, 24) => BitDepth::Int24,
        (SampleFormat::Int, 16) => BitDepth::Int16,
        (f, b) => {
            return Err(IoError::UnsupportedCodec { path: path.into(), reason: format!("{b}-bit {f:?} samples") })
        }
    };
    let declared = reader.len() as usize;
    if declared % channels != 0 {
        return Err(IoError::TruncatedData {
            path: path.into(),
            reason: format!("{declared} samples do not fill {channels} channels"),
        });
    }
    let values: Vec<f64> = match bit_depth {
        BitDepth::Float32 => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| data_error(path, e))?,
        BitDepth::Int24 | BitDepth::Int16 => {
            let scale = (1u32 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| data_error(path, e))?
        }
    };
    if values.len() != declared {
        return Err(IoError::TruncatedData {
            path: path.into(),
            reason: format!("read {} of {declared} samples", values.len()),
        });
    }
    let frames = declared / channels;
    let samples = DataMatrix::from_row_slice(frames, channels, &values)
        .map_err(|e| IoError::MalformedHeader { path: path.into(), reason: e.to_string() })?;
    Ok(AudioFile { sample_rate: spec.sample_rate, samples, bit_depth })
}

/// Writes atomically in `audio.bit_depth`. Integer formats are rounded and
/// clipped to full scale.
pub fn write_wav(path: &Path, audio: &AudioFile) -> Result<(), IoError> {
    let channels = u16::try_from(audio.channels())
        .map_err(|_| IoError::InvalidConfig(format!("{} channels do not fit a WAV header", audio.channels())))?;
    let (bits, fmt) = audio.bit_depth.spec();
    let spec = WavSpec { channels, sample_rate: audio.sample_rate, bits_per_sample: bits, sample_format: fmt };
    let x = audio.samples.as_matrix();
    let depth = audio.bit_depth;
    write_atomic(path, |w| {
        let mut wr = WavWriter::new(w, spec).map_err(to_io)?;
        for t in 0..x.nrows() {
            for c in 0..x.ncols() {
                let v = x[(t, c)];
                match depth {
                    BitDepth::Float32 => wr.write_sample(v as f32),
                    BitDepth::Int24 | BitDepth::Int16 => {
                        let scale = (1i64 << (bits - 1)) as f64;
                        let q = (v * scale).round().clamp(-scale, scale - 1.0) as i32;
                        wr.write_sample(q)
                    }
                }
                .map_err(to_io)?;
            }
        }
        wr.finalize().map_err(to_io)
    })
}

fn to_io(e: hound::Error) -> std::io::Error {
    match e {
        hound::Error::IoError(io) => io,
        other => std::io::Error::other(other.to_string()),
    }
}

const SIDECAR_MAGIC: &[u8; 8] = b"SRIRF64\0";

/// Raw float64 dump: magic, `u32` channels, `u32` sample rate, `u64`
/// frames, then interleaved little-endian samples.
pub fn write_f64_sidecar(path: &Path, sample_rate: u32, samples: &DataMatrix) -> Result<(), IoError> {
    let x = samples.as_matrix();
    write_atomic(path, |w| {
        w.write_all(SIDECAR_MAGIC)?;
        w.write_all(&(x.ncols() as u32).to_le_bytes())?;
        w.write_all(&sample_rate.to_le_bytes())?;
        w.write_all(&(x.nrows() as u64).to_le_bytes())?;
        for t in 0..x.nrows() {
            for c in 0..x.ncols() {
                w.write_all(&x[(t, c)].to_le_bytes())?;
            }
        }
        Ok(())
    })
}

/// Inverse of [`write_f64_sidecar`]; returns the sample rate and samples.
pub fn read_f64_sidecar(path: &Path) -> Result<(u32, DataMatrix), IoError> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| IoError::io(path, e))?;
    let malformed = |reason: &str| IoError::MalformedHeader { path: path.into(), reason: reason.into() };
    if bytes.len() < 24 || &bytes[..8] != SIDECAR_MAGIC {
        return Err(malformed("not a float64 sidecar"));
    }
    let channels = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let rate = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let frames = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    if channels == 0 {
        return Err(malformed("zero channels"));
    }
    let needed =
        frames.checked_mul(channels).and_then(|n| n.checked_mul(8)).ok_or_else(|| malformed("size overflow"))?;
    if bytes.len() - 24 < needed {
        return Err(IoError::TruncatedData {
            path: path.into(),
            reason: format!("{} of {needed} data bytes", bytes.len() - 24),
        });
    }
    let values: Vec<f64> =
        bytes[24..24 + needed].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let m = DataMatrix::from_row_slice(frames, channels, &values).map_err(|e| malformed(&e.to_string()))?;
    Ok((rate, m))
}
