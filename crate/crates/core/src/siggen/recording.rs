//! Raw I/Q recordings: interleaved little-endian `f32` pairs plus a JSON sidecar.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

const BYTES_PER_SAMPLE: u64 = 8;

/// Sidecar metadata describing a recording file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingMeta {
    pub name: String,
    pub num_samples: u64,
    /// Optional `[start, end)` sample ranges; each becomes one pool entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<[u64; 2]>>,
}

/// Named collection of interference recordings, possibly of differing lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingPool {
    pub name: String,
    pub recordings: Vec<ComplexSignal>,
}

impl RecordingPool {
    pub fn new(name: impl Into<String>, recordings: Vec<ComplexSignal>) -> Result<Self> {
        if recordings.is_empty() {
            return Err(Error::invalid("recording pool must hold at least one recording"));
        }
        Ok(Self { name: name.into(), recordings })
    }

    pub fn min_len(&self) -> usize {
        self.recordings.iter().map(|r| r.len()).min().unwrap_or(0)
    }
}

/// Decodes interleaved I/Q bytes.
pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Complex64>> {
    let len = bytes.len() as u64;
    if !len.is_multiple_of(BYTES_PER_SAMPLE) {
        return Err(Error::Format {
            offset: len - len % BYTES_PER_SAMPLE,
            message: format!("byte count {len} is not a multiple of 8 (trailing partial sample)"),
        });
    }
    bytes
        .chunks_exact(BYTES_PER_SAMPLE as usize)
        .enumerate()
        .map(|(n, chunk)| {
            let re = f32::from_le_bytes(chunk[0..4].try_into().expect("4-byte slice"));
            let im = f32::from_le_bytes(chunk[4..8].try_into().expect("4-byte slice"));
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Format {
                    offset: n as u64 * BYTES_PER_SAMPLE,
                    message: format!("non-finite sample at index {n}"),
                });
            }
            Ok(Complex64::new(re as f64, im as f64))
        })
        .collect()
}

/// Encodes samples as interleaved I/Q, rounding to `f32`.
pub fn encode_iq(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * BYTES_PER_SAMPLE as usize);
    for z in samples {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

/// Builds a pool from raw bytes and parsed metadata.
pub fn parse_recordings(bytes: &[u8], meta: &RecordingMeta) -> Result<RecordingPool> {
    let expected = meta.num_samples.checked_mul(BYTES_PER_SAMPLE).ok_or_else(|| Error::Format {
        offset: 0,
        message: format!("num_samples {} overflows", meta.num_samples),
    })?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Format {
            offset: actual,
            message: format!("file truncated: metadata declares {} samples ({expected} bytes)", meta.num_samples),
        });
    }
    let samples = decode_iq(bytes)?;
    if actual != expected {
        return Err(Error::Format {
            offset: expected,
            message: format!("byte count {actual} does not match 8 * num_samples = {expected}"),
        });
    }
    if samples.is_empty() {
        return Err(Error::Format { offset: 0, message: "recording is empty".into() });
    }
    let recordings = match &meta.frames {
        None => vec![ComplexSignal::from_vec_unchecked(samples)],
        Some(frames) => {
            let mut out = Vec::with_capacity(frames.len());
            for [start, end] in frames {
                if start >= end || *end > meta.num_samples {
                    return Err(Error::Format {
                        offset: start.saturating_mul(BYTES_PER_SAMPLE),
                        message: format!("frame [{start}, {end}) is empty or exceeds {} samples", meta.num_samples),
                    });
                }
                out.push(ComplexSignal::from_vec_unchecked(samples[*start as usize..*end as usize].to_vec()));
            }
            if out.is_empty() {
                return Err(Error::Format { offset: 0, message: "frame list is empty".into() });
            }
            out
        }
    };
    RecordingPool::new(meta.name.clone(), recordings)
}

pub fn read_meta(meta_path: &Path) -> Result<RecordingMeta> {
    let text = fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: 0,
        message: format!("{}: line {} column {}: {e}", meta_path.display(), e.line(), e.column()),
    })
}

pub fn load_recordings(data_path: &Path, meta_path: &Path) -> Result<RecordingPool> {
    let meta = read_meta(meta_path)?;
    let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    parse_recordings(&bytes, &meta)
}

/// Writes a signal and its sidecar; `frames` is recorded verbatim.
pub fn write_recording(
    signal: &ComplexSignal,
    name: &str,
    frames: Option<Vec<[u64; 2]>>,
    data_path: &Path,
    meta_path: &Path,
) -> Result<()> {
    fs::write(data_path, encode_iq(signal.as_slice())).map_err(|e| Error::io(data_path, e))?;
    let meta = RecordingMeta { name: name.to_string(), num_samples: signal.len() as u64, frames };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(meta_path, text).map_err(|e| Error::io(meta_path, e))
}
