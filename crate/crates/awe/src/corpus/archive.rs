//! The `AWEF` feature archive: per-utterance frame matrices at a fixed frame
//! rate.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "AWEF" | version u32 = 1 | frame_rate_hz f64 | dim u32 | count u32
//! per entry: id_len u32 | id bytes (UTF-8) | frames u32 | frames*dim f32, row-major
//! ```

use std::collections::btree_map::{self, BTreeMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::codec::{self, ByteReader};
use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"AWEF";
pub const ARCHIVE_VERSION: u32 = 1;
pub const DEFAULT_FRAME_RATE_HZ: f64 = 50.0;

/// Frame-level representations for a set of utterances.
///
/// Entries are kept ordered by utterance id so iteration and serialization
/// are deterministic. Every matrix has `dim` columns, at least one row and
/// only finite values; [`FeatureArchive::insert`] enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArchive {
    frame_rate_hz: f64,
    dim: usize,
    entries: BTreeMap<String, Array2<f32>>,
}

impl FeatureArchive {
    pub fn new(dim: usize, frame_rate_hz: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("archive dim must be positive".into()));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::Argument(format!(
                "frame rate must be positive and finite, got {frame_rate_hz}"
            )));
        }
        Ok(FeatureArchive {
            frame_rate_hz,
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn from_entries<I, S>(dim: usize, frame_rate_hz: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Array2<f32>)>,
        S: Into<String>,
    {
        let mut archive = FeatureArchive::new(dim, frame_rate_hz)?;
        for (id, frames) in entries {
            archive.insert(id, frames)?;
        }
        Ok(archive)
    }

    /// Add an utterance, checking width, row count and finiteness.
    pub fn insert(&mut self, id: impl Into<String>, frames: Array2<f32>) -> Result<()> {
        let id = id.into();
        if frames.ncols() != self.dim {
            let reference = self
                .entries
                .keys()
                .next()
                .map(|k| format!(" (entry {k:?} has {} columns)", self.dim))
                .unwrap_or_default();
            return Err(Error::Consistency(format!(
                "entry {id:?} has {} columns but archive dim is {}{reference}",
                frames.ncols(),
                self.dim
            )));
        }
        if frames.nrows() == 0 {
            return Err(Error::Data(format!("entry {id:?} has no frames")));
        }
        if let Some((t, _)) = frames
            .outer_iter()
            .enumerate()
            .find(|(_, row)| row.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Data(format!(
                "entry {id:?} has a non-finite value at frame {t}"
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::Consistency(format!("duplicate utterance id {id:?}")));
        }
        self.entries.insert(id, frames);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Array2<f32>> {
        self.entries.get(id)
    }

    pub fn iter(&self) -> btree_map::Iter<'_, String, Array2<f32>> {
        self.entries.iter()
    }

    pub fn total_frames(&self) -> usize {
        self.entries.values().map(|m| m.nrows()).sum()
    }

    /// Serialize to the on-disk byte layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(24 + self.total_frames() * self.dim * 4);
        out.extend_from_slice(ARCHIVE_MAGIC);
        codec::put_u32(&mut out, ARCHIVE_VERSION);
        codec::put_f64(&mut out, self.frame_rate_hz);
        codec::put_u32(&mut out, codec::len_u32(self.dim, "dim")?);
        codec::put_u32(&mut out, codec::len_u32(self.entries.len(), "entry count")?);
        for (id, frames) in &self.entries {
            codec::put_string(&mut out, id)?;
            codec::put_u32(&mut out, codec::len_u32(frames.nrows(), "frame count")?);
            for row in frames.outer_iter() {
                codec::put_f32s(&mut out, row.iter());
            }
        }
        Ok(out)
    }

    /// Parse the on-disk byte layout, validating every archive invariant.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(ARCHIVE_MAGIC)?;
        let version = r.u32("version")?;
        if version != ARCHIVE_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported archive version {version}"),
            });
        }
        let rate_offset = r.offset();
        let frame_rate_hz = r.f64("frame rate")?;
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::Format {
                offset: rate_offset,
                message: format!("frame rate must be positive, got {frame_rate_hz}"),
            });
        }
        let dim_offset = r.offset();
        let dim = r.u32("dim")? as usize;
        if dim == 0 {
            return Err(Error::Format {
                offset: dim_offset,
                message: "dim must be positive".into(),
            });
        }
        let count = r.u32("entry count")?;
        let mut archive = FeatureArchive::new(dim, frame_rate_hz)?;
        for _ in 0..count {
            let id = r.string("utterance id")?;
            let frames = r.u32("frame count")? as usize;
            let values = r.f32s(frames * dim, "frame data")?;
            let matrix =
                Array2::from_shape_vec((frames, dim), values).expect("length checked by reader");
            archive.insert(id, matrix)?;
        }
        if r.remaining() != 0 {
            return r.fail(format!("{} trailing bytes after last entry", r.remaining()));
        }
        Ok(archive)
    }
}

pub fn read_feature_archive(path: impl AsRef<Path>) -> Result<FeatureArchive> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureArchive::from_bytes(&bytes)
}

pub fn write_feature_archive(archive: &FeatureArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = archive.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ManifestLine<'a> {
    id: &'a str,
    frames: usize,
    duration_s: f64,
}

/// Write the optional JSONL sidecar: one `{id, frames, duration_s}` object
/// per utterance.
pub fn write_manifest(archive: &FeatureArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (id, frames) in archive.iter() {
        let line = ManifestLine {
            id,
            frames: frames.nrows(),
            duration_s: frames.nrows() as f64 / archive.frame_rate_hz,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}
