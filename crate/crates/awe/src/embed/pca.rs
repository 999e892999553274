//! Frame-level PCA.
//!
//! The covariance of the centered frames is eigendecomposed densely when the
//! input width is moderate. For very wide inputs (subsampled embeddings run
//! to tens of thousands of dimensions) the top components are found by
//! orthogonal subspace iteration against the implicit covariance operator,
//! finished with a Rayleigh-Ritz step.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Widest input that is eigendecomposed densely under [`PcaSolver::Auto`].
pub const DENSE_PCA_MAX_DIM: usize = 2048;

const SUBSPACE_OVERSAMPLE: usize = 8;
const SUBSPACE_MAX_ITERS: usize = 500;
const SUBSPACE_TOL: f64 = 1e-13;
const MAX_PARTIALS: usize = 16;
const MIN_CHUNK_ROWS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcaSolver {
    /// Dense up to [`DENSE_PCA_MAX_DIM`] input dimensions, iterative above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// A fitted orthonormal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub input_dim: usize,
    pub output_dim: usize,
    pub center: Vec<f64>,
    /// `output_dim x input_dim`, orthonormal rows.
    pub basis: Array2<f64>,
    /// Eigenvalues of the sample covariance, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    /// `(frames - center) * basis^T`.
    pub fn project(&self, frames: ArrayView2<'_, f32>) -> Result<Array2<f32>> {
        if frames.ncols() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                found: frames.ncols(),
            });
        }
        let centered = self.centered(frames);
        Ok(centered.dot(&self.basis.t()).mapv(|v| v as f32))
    }

    /// Map projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: ArrayView2<'_, f32>) -> Result<Array2<f64>> {
        if projected.ncols() != self.output_dim {
            return Err(Error::Shape {
                expected: self.output_dim,
                found: projected.ncols(),
            });
        }
        let mut out = projected.mapv(|v| v as f64).dot(&self.basis);
        for mut row in out.outer_iter_mut() {
            for (v, c) in row.iter_mut().zip(&self.center) {
                *v += c;
            }
        }
        Ok(out)
    }

    fn centered(&self, frames: ArrayView2<'_, f32>) -> Array2<f64> {
        let mut out = frames.mapv(|v| v as f64);
        for mut row in out.outer_iter_mut() {
            for (v, c) in row.iter_mut().zip(&self.center) {
                *v -= c;
            }
        }
        out
    }
}

/// Fit PCA with `k` components over all rows of `blocks`.
pub fn fit_pca(blocks: &[ArrayView2<'_, f32>], k: usize) -> Result<PcaModel> {
    fit_pca_with(blocks, k, PcaSolver::Auto)
}

pub fn fit_pca_with(
    blocks: &[ArrayView2<'_, f32>],
    k: usize,
    solver: PcaSolver,
) -> Result<PcaModel> {
    let dim = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    if let Some(b) = blocks.iter().find(|b| b.ncols() != dim) {
        return Err(Error::Shape {
            expected: dim,
            found: b.ncols(),
        });
    }
    let rows = Rows::new(blocks);
    if rows.len() < 2 {
        return Err(Error::Argument(format!(
            "PCA needs at least 2 frames, got {}",
            rows.len()
        )));
    }
    if k == 0 || k > dim {
        return Err(Error::Argument(format!(
            "PCA output dim {k} must be in 1..={dim}"
        )));
    }

    let center = rows.mean(dim);
    let dense = match solver {
        PcaSolver::Auto => dim <= DENSE_PCA_MAX_DIM,
        PcaSolver::Dense => true,
        PcaSolver::Iterative => false,
    };
    let (values, vectors) = if dense {
        dense_eigen(&rows, &center)
    } else {
        subspace_eigen(&rows, &center, k)
    };

    let mut components: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    for (_, v) in components.iter_mut() {
        fix_sign(v);
    }
    components.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la)
            .then_with(|| dominant_index(va).cmp(&dominant_index(vb)))
    });
    components.truncate(k);

    let mut basis = Array2::<f64>::zeros((k, dim));
    let mut explained_variance = Vec::with_capacity(k);
    for (i, (lambda, v)) in components.into_iter().enumerate() {
        basis.row_mut(i).assign(&ndarray::ArrayView1::from(&v[..]));
        explained_variance.push(lambda.max(0.0));
    }
    Ok(PcaModel {
        input_dim: dim,
        output_dim: k,
        center,
        basis,
        explained_variance,
    })
}

/// First index of the largest-magnitude coordinate.
fn dominant_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Flip `v` so its largest-magnitude coordinate is positive.
fn fix_sign(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    if v[dominant_index(v)] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Row access over a list of blocks, cut into a fixed set of chunks whose
/// boundaries depend only on the row count. Partial results are merged in
/// chunk order, so the output does not depend on thread scheduling.
struct Rows<'a, 'b> {
    blocks: &'b [ArrayView2<'a, f32>],
    offsets: Vec<usize>,
}

impl<'a, 'b> Rows<'a, 'b> {
    fn new(blocks: &'b [ArrayView2<'a, f32>]) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in blocks {
            acc += b.nrows();
            offsets.push(acc);
        }
        Rows { blocks, offsets }
    }

    fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn chunks(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.len();
        let size = n.div_ceil(MAX_PARTIALS).max(MIN_CHUNK_ROWS);
        (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
    }

    /// Rows in `range`, centered, as an `rows x dim` f64 matrix.
    fn centered(&self, range: std::ops::Range<usize>, center: &[f64]) -> DMatrix<f64> {
        let dim = center.len();
        let mut out = DMatrix::<f64>::zeros(range.len(), dim);
        let mut b = self.offsets.partition_point(|&o| o <= range.start) - 1;
        for (r, global) in range.enumerate() {
            while global >= self.offsets[b + 1] {
                b += 1;
            }
            let row = self.blocks[b].row(global - self.offsets[b]);
            for (j, (&x, c)) in row.iter().zip(center).enumerate() {
                out[(r, j)] = x as f64 - c;
            }
        }
        out
    }

    fn mean(&self, dim: usize) -> Vec<f64> {
        let mut sum = vec![0.0f64; dim];
        for b in self.blocks {
            for row in b.outer_iter() {
                for (s, &x) in sum.iter_mut().zip(row.iter()) {
                    *s += x as f64;
                }
            }
        }
        let n = self.len() as f64;
        sum.into_iter().map(|s| s / n).collect()
    }

    /// Sum over chunks of `f(centered chunk)`, merged in chunk order.
    fn reduce<F>(&self, center: &[f64], init: DMatrix<f64>, f: F) -> DMatrix<f64>
    where
        F: Fn(&DMatrix<f64>) -> DMatrix<f64> + Sync,
    {
        let partials: Vec<DMatrix<f64>> = self
            .chunks()
            .into_par_iter()
            .map(|r| f(&self.centered(r, center)))
            .collect();
        partials.into_iter().fold(init, |acc, p| acc + p)
    }
}

fn dense_eigen(rows: &Rows<'_, '_>, center: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = center.len();
    let scatter = rows.reduce(center, DMatrix::zeros(dim, dim), |x| x.transpose() * x);
    let cov = scatter / (rows.len() - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let vectors = eig
        .eigenvectors
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    (eig.eigenvalues.iter().copied().collect(), vectors)
}

fn subspace_eigen(rows: &Rows<'_, '_>, center: &[f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = center.len();
    let width = (k + SUBSPACE_OVERSAMPLE).min(dim);
    let denom = (rows.len() - 1) as f64;
    let apply = |v: &DMatrix<f64>| -> DMatrix<f64> {
        rows.reduce(center, DMatrix::zeros(dim, v.ncols()), |x| {
            x.transpose() * (x * v)
        }) / denom
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f9c);
    let start = DMatrix::<f64>::from_fn(dim, width, |_, _| StandardNormal.sample(&mut rng));
    let mut basis = start.qr().q();
    let mut previous: Option<Vec<f64>> = None;
    for _ in 0..SUBSPACE_MAX_ITERS {
        let image = apply(&basis);
        let ritz = SymmetricEigen::new(basis.tr_mul(&image));
        let mut top: Vec<f64> = ritz.eigenvalues.iter().copied().collect();
        top.sort_by(|a, b| b.total_cmp(a));
        top.truncate(k);
        basis = image.qr().q();
        let scale = top
            .first()
            .copied()
            .unwrap_or(0.0)
            .abs()
            .max(f64::MIN_POSITIVE);
        if let Some(prev) = &previous {
            let change = top
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change <= SUBSPACE_TOL * scale {
                break;
            }
        }
        previous = Some(top);
    }
    let image = apply(&basis);
    let mut small = basis.tr_mul(&image);
    small = (&small + small.transpose()) * 0.5;
    let ritz = SymmetricEigen::new(small);
    let vectors = (basis * &ritz.eigenvectors)
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            c.iter().map(|x| x / norm).collect()
        })
        .collect();
    (ritz.eigenvalues.iter().copied().collect(), vectors)
}
