//! From per-word frame matrices to fixed-length embeddings.
//!
//! Each segment goes through slice, then normalize (optional), then PCA
//! projection (optional), then pooling. Normalization always precedes PCA.

mod normalize;
mod pca;
mod pool;
mod set;

use ndarray::ArrayView2;
use rayon::prelude::*;

pub use normalize::{fit_normalizer, Normalizer, ScaleMode, NORMALIZER_EPSILON};
pub use pca::{fit_pca, fit_pca_with, PcaModel, PcaSolver, DENSE_PCA_MAX_DIM};
pub use pool::{pool, subsample_indices, PoolingMethod, DEFAULT_SUBSAMPLE_FRAMES};
pub use set::{
    read_embeddings, write_embeddings, EmbeddingSet, EMBEDDING_MAGIC, EMBEDDING_VERSION,
};

use crate::corpus::{slice_frames, FeatureArchive, WordSegment};
use crate::error::{Error, Result, ResultExt};

/// Transform one word's frames: normalize, project, pool.
pub fn embed_frames(
    frames: ArrayView2<'_, f32>,
    method: PoolingMethod,
    norm: Option<&Normalizer>,
    pca: Option<&PcaModel>,
) -> Result<Vec<f32>> {
    let normalized = norm.map(|n| n.apply(frames)).transpose()?;
    let current = normalized.as_ref().map_or(frames, |m| m.view());
    let projected = pca.map(|p| p.project(current)).transpose()?;
    let current = projected.as_ref().map_or(current, |m| m.view());
    pool(current, method)
}

/// Embed every segment, preserving input order.
///
/// Segments are processed in parallel; each one is computed independently,
/// so the result does not depend on the thread count.
pub fn embed_segments(
    archive: &FeatureArchive,
    segments: &[WordSegment],
    method: PoolingMethod,
    norm: Option<&Normalizer>,
    pca: Option<&PcaModel>,
) -> Result<EmbeddingSet> {
    method.validate()?;
    if let Some(n) = norm {
        if n.dim() != archive.dim() {
            return Err(Error::Shape {
                expected: archive.dim(),
                found: n.dim(),
            }
            .context("normalizer width does not match archive"));
        }
    }
    let frame_dim = match pca {
        Some(p) if p.input_dim != archive.dim() => {
            return Err(Error::Shape {
                expected: archive.dim(),
                found: p.input_dim,
            }
            .context("PCA input width does not match archive"));
        }
        Some(p) => p.output_dim,
        None => archive.dim(),
    };
    let rows: Vec<Vec<f32>> = segments
        .par_iter()
        .enumerate()
        .map(|(i, seg)| {
            slice_frames(archive, seg)
                .and_then(|frames| embed_frames(frames, method, norm, pca))
                .context_with(|| {
                    format!(
                        "segment {i} ({:?} in {:?} at {}..{})",
                        seg.word, seg.utterance_id, seg.start_s, seg.end_s
                    )
                })
        })
        .collect::<Result<_>>()?;
    let labels = segments.iter().map(|s| s.word.clone()).collect();
    if rows.is_empty() {
        return EmbeddingSet::new(
            labels,
            ndarray::Array2::zeros((0, method.output_dim(frame_dim))),
        );
    }
    EmbeddingSet::from_rows(labels, rows)
}

/// Frames of every segment, in segment order, for fitting the normalizer
/// and PCA on the evaluated set.
pub fn segment_frames<'a>(
    archive: &'a FeatureArchive,
    segments: &[WordSegment],
) -> Result<Vec<ArrayView2<'a, f32>>> {
    segments.iter().map(|s| slice_frames(archive, s)).collect()
}
