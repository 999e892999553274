//! Labelled embedding sets and their `AWEE` container.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "AWEE" | version u32 = 1 | config_len u32 | config JSON (UTF-8, "null" if absent)
//! | dim u32 | count u32
//! per item: label_len u32 | label bytes | dim f32
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::codec::{self, ByteReader};
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"AWEE";
pub const EMBEDDING_VERSION: u32 = 1;

/// Word-type labels with one fixed-length embedding per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    labels: Vec<String>,
    /// `n_items x dim`.
    vectors: Array2<f32>,
    /// The configuration that produced the set, when known.
    pub meta: Option<ExperimentConfig>,
}

impl EmbeddingSet {
    pub fn new(labels: Vec<String>, vectors: Array2<f32>) -> Result<Self> {
        if labels.len() != vectors.nrows() {
            return Err(Error::Argument(format!(
                "{} labels for {} vectors",
                labels.len(),
                vectors.nrows()
            )));
        }
        if let Some((i, _)) = vectors
            .outer_iter()
            .enumerate()
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Data(format!(
                "embedding {i} ({:?}) has a non-finite value",
                labels[i]
            )));
        }
        Ok(EmbeddingSet {
            labels,
            vectors,
            meta: None,
        })
    }

    /// Build from row vectors, which must all share one length.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::Argument(format!(
                "embedding {i} has length {}, expected {dim}",
                r.len()
            )));
        }
        let n = rows.len();
        let flat: Vec<f32> = rows.into_iter().flatten().collect();
        let vectors = Array2::from_shape_vec((n, dim), flat).expect("lengths checked");
        EmbeddingSet::new(labels, vectors)
    }

    pub fn with_meta(mut self, meta: ExperimentConfig) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &Array2<f32> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f32> {
        self.vectors.row(i)
    }

    /// Number of distinct labels.
    pub fn n_types(&self) -> usize {
        self.labels
            .iter()
            .collect::<std::collections::HashSet<_>>()
            .len()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let config = serde_json::to_string(&self.meta)?;
        let mut out = Vec::with_capacity(20 + config.len() + self.vectors.len() * 4);
        out.extend_from_slice(EMBEDDING_MAGIC);
        codec::put_u32(&mut out, EMBEDDING_VERSION);
        codec::put_string(&mut out, &config)?;
        codec::put_u32(&mut out, codec::len_u32(self.dim(), "dim")?);
        codec::put_u32(&mut out, codec::len_u32(self.len(), "item count")?);
        for (label, v) in self.labels.iter().zip(self.vectors.outer_iter()) {
            codec::put_string(&mut out, label)?;
            codec::put_f32s(&mut out, v.iter());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(EMBEDDING_MAGIC)?;
        let version = r.u32("version")?;
        if version != EMBEDDING_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported embedding file version {version}"),
            });
        }
        let config_offset = r.offset();
        let config = r.string("config")?;
        let meta: Option<ExperimentConfig> =
            serde_json::from_str(&config).map_err(|e| Error::Format {
                offset: config_offset,
                message: format!("config field is not a valid configuration: {e}"),
            })?;
        let dim = r.u32("dim")? as usize;
        let count = r.u32("item count")? as usize;
        let mut labels = Vec::with_capacity(count.min(1 << 20));
        let mut flat = Vec::with_capacity((count * dim).min(1 << 26));
        for _ in 0..count {
            labels.push(r.string("label")?);
            flat.extend(r.f32s(dim, "vector")?);
        }
        if r.remaining() != 0 {
            return r.fail(format!("{} trailing bytes after last item", r.remaining()));
        }
        let vectors = Array2::from_shape_vec((count, dim), flat).expect("length checked");
        let mut set = EmbeddingSet::new(labels, vectors)?;
        set.meta = meta;
        Ok(set)
    }
}

pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, set.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingSet::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_with_and_without_meta() {
        let set = EmbeddingSet::new(
            vec!["alpha".into(), "beta".into()],
            array![[1.0f32, -0.5], [0.0, 3.25]],
        )
        .unwrap();
        let back = EmbeddingSet::from_bytes(&set.to_bytes().unwrap()).unwrap();
        assert_eq!(back, set);

        let with = set.with_meta(ExperimentConfig::default());
        let back = EmbeddingSet::from_bytes(&with.to_bytes().unwrap()).unwrap();
        assert_eq!(back, with);
    }

    #[test]
    fn rejects_mismatch_and_non_finite() {
        assert!(EmbeddingSet::new(vec!["a".into()], Array2::zeros((2, 3))).is_err());
        assert!(matches!(
            EmbeddingSet::new(vec!["a".into()], array![[f32::INFINITY]]),
            Err(Error::Data(_))
        ));
        assert!(EmbeddingSet::from_rows(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![1.0, 2.0]]
        )
        .is_err());
    }

    #[test]
    fn wrong_magic() {
        let bytes = EmbeddingSet::new(vec![], Array2::zeros((0, 4)))
            .unwrap()
            .to_bytes()
            .unwrap();
        let mut archive_like = bytes.clone();
        archive_like[..4].copy_from_slice(b"AWEF");
        assert!(matches!(
            EmbeddingSet::from_bytes(&archive_like),
            Err(Error::Format { offset: 0, .. })
        ));
        assert_eq!(EmbeddingSet::from_bytes(&bytes).unwrap().dim(), 4);
    }

    #[test]
    fn counts_types() {
        let set = EmbeddingSet::from_rows(
            vec!["a".into(), "b".into(), "a".into()],
            vec![vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        assert_eq!(set.n_types(), 2);
    }
}
