//! File formats: multichannel WAV, float64 sidecars, geometry tables, run
//! configuration and CSV tables. Every writer goes through a temporary file
//! in the destination directory and is renamed into place.

mod config;
mod geometry;
mod tables;
mod wav;

pub use config::{DecomposeSection, Domain, OutputSection, RunConfig};
pub use geometry::{format_geometry, parse_geometry, read_geometry};
pub use tables::{read_events_csv, write_events_csv, write_rank_csv, EVENTS_CSV_HEADER, RANK_CSV_HEADER};
pub use wav::{read_f64_sidecar, read_wav, write_f64_sidecar, write_wav, AudioFile, BitDepth};

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sphere::SphereError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: unsupported codec: {reason}")]
    UnsupportedCodec { path: PathBuf, reason: String },
    #[error("{path}: truncated data: {reason}")]
    TruncatedData { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }
}

/// Writes through a temporary file next to `path` and renames it into place
/// once `write` succeeds.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<(), IoError>
where
    F: FnOnce(&mut BufWriter<&mut fs::File>) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w).and_then(|_| w.flush()).map_err(|e| IoError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}
