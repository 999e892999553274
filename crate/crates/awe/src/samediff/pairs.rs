//! All-pairs cosine scoring.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::embed::EmbeddingSet;
use crate::error::{Error, Result};

/// Norms below this count as zero; such vectors score 0 against everything.
pub const ZERO_NORM: f64 = 1e-12;

pub const DEFAULT_BLOCK_SIZE: usize = 64;

const LANES: usize = 16;

/// `u . v / (|u| |v|)` in f64, or 0 when either norm is below [`ZERO_NORM`].
pub fn cosine_similarity(u: ArrayView1<'_, f32>, v: ArrayView1<'_, f32>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            expected: u.len(),
            found: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::Argument("cosine of empty vectors".into()));
    }
    let (mut dot, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v.iter()) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    let (nu, nv) = (uu.sqrt(), vv.sqrt());
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv))
}

/// Inner product with a fixed lane layout. The summation order depends only
/// on the vector length, so a given pair always produces the same bits.
#[inline]
pub(crate) fn dot_lanes(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f32; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in ra.iter().zip(rb) {
        tail += (*x as f64) * (*y as f64);
    }
    acc.iter().map(|&v| v as f64).sum::<f64>() + tail
}

/// Tuning knobs for pair scoring. None of them affects the scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringOptions {
    /// Rows and columns per tile of the blocked inner-product loop.
    pub block_size: usize,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub workers: usize,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            block_size: DEFAULT_BLOCK_SIZE,
            workers: 0,
        }
    }
}

/// Run `f` on a pool with `workers` threads, or on the current pool for 0.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot build a {workers}-thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Unit-normalized copy of the embeddings plus integer label ids.
pub(crate) struct Prepared {
    pub unit: Array2<f32>,
    pub label_ids: Vec<u32>,
    pub zero_norm_items: usize,
}

impl Prepared {
    pub(crate) fn new(set: &EmbeddingSet) -> Self {
        let mut unit = set.vectors().to_owned();
        let mut zero_norm_items = 0;
        for mut row in unit.outer_iter_mut() {
            let norm = row
                .iter()
                .map(|&x| (x as f64) * (x as f64))
                .sum::<f64>()
                .sqrt();
            if norm < ZERO_NORM {
                row.fill(0.0);
                zero_norm_items += 1;
            } else {
                row.mapv_inplace(|x| (x as f64 / norm) as f32);
            }
        }
        let mut ids = HashMap::new();
        let label_ids = set
            .labels()
            .iter()
            .map(|l| {
                let next = ids.len() as u32;
                *ids.entry(l.as_str()).or_insert(next)
            })
            .collect();
        Prepared {
            unit: unit.as_standard_layout().to_owned(),
            label_ids,
            zero_norm_items,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.label_ids.len()
    }

    pub(crate) fn row(&self, i: usize) -> &[f32] {
        self.unit.row(i).to_slice().expect("standard layout")
    }

    /// Visit every pair `(i, j)`, `i < j`, with rows `rows` of the upper
    /// triangle, tile by tile.
    pub(crate) fn for_pairs_in_rows(
        &self,
        rows: std::ops::Range<usize>,
        block: usize,
        mut visit: impl FnMut(usize, usize, f64),
    ) {
        let n = self.n();
        let block = block.max(1);
        let mut j0 = rows.start + 1;
        while j0 < n {
            let j1 = (j0 + block).min(n);
            for i in rows.clone() {
                let a = self.row(i);
                for j in j0.max(i + 1)..j1 {
                    visit(i, j, dot_lanes(a, self.row(j)));
                }
            }
            j0 = j1;
        }
    }
}

/// Position of pair `(i, j)`, `i < j`, in row-major upper-triangle order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    row_offset(n, i) + (j - i - 1)
}

fn row_offset(n: usize, i: usize) -> usize {
    i * n - i * (i + 1) / 2
}

pub fn n_pairs(n_items: usize) -> usize {
    n_items * n_items.saturating_sub(1) / 2
}

/// Similarity scores and same-word flags for a list of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPairs {
    pub scores: Vec<f64>,
    pub positives: Vec<bool>,
    /// Items the pairs were drawn from, when built by [`pairwise_scores`].
    pub n_items: Option<usize>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub zero_norm_items: usize,
}

impl ScoredPairs {
    /// Wrap an arbitrary scored list. Scores must be finite.
    pub fn from_parts(scores: Vec<f64>, positives: Vec<bool>) -> Result<Self> {
        if scores.len() != positives.len() {
            return Err(Error::Argument(format!(
                "{} scores for {} labels",
                scores.len(),
                positives.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("pair {i} has a non-finite score")));
        }
        let n_positive = positives.iter().filter(|&&p| p).count();
        Ok(ScoredPairs {
            n_negative: scores.len() - n_positive,
            scores,
            positives,
            n_items: None,
            n_positive,
            zero_norm_items: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn pairwise_scores(set: &EmbeddingSet) -> Result<ScoredPairs> {
    pairwise_scores_with(set, ScoringOptions::default())
}

/// Score all `n (n - 1) / 2` pairs, in row-major upper-triangle order.
///
/// Vectors are unit-normalized once; each score is a fixed-order inner
/// product, so the output is bitwise identical for any block size and any
/// number of workers.
pub fn pairwise_scores_with(set: &EmbeddingSet, opts: ScoringOptions) -> Result<ScoredPairs> {
    let n = set.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "same-different scoring needs at least 2 items, got {n}"
        )));
    }
    let prep = Prepared::new(set);
    let total = n_pairs(n);
    let mut scores = vec![0.0f64; total];
    let mut positives = vec![false; total];
    let block = opts.block_size.max(1);

    // Row blocks own disjoint, contiguous stretches of the output.
    let mut jobs = Vec::new();
    {
        let mut s_rest: &mut [f64] = &mut scores;
        let mut p_rest: &mut [bool] = &mut positives;
        let mut i0 = 0;
        while i0 < n - 1 {
            let i1 = (i0 + block).min(n - 1);
            let len = row_offset(n, i1) - row_offset(n, i0);
            let (s, sr) = std::mem::take(&mut s_rest).split_at_mut(len);
            let (p, pr) = std::mem::take(&mut p_rest).split_at_mut(len);
            s_rest = sr;
            p_rest = pr;
            jobs.push((i0..i1, s, p));
            i0 = i1;
        }
    }
    with_workers(opts.workers, || {
        jobs.into_par_iter().for_each(|(rows, s, p)| {
            let base = row_offset(n, rows.start);
            prep.for_pairs_in_rows(rows, block, |i, j, score| {
                let k = pair_index(n, i, j) - base;
                s[k] = score;
                p[k] = prep.label_ids[i] == prep.label_ids[j];
            });
        })
    })?;

    let n_positive = positives.iter().filter(|&&p| p).count();
    Ok(ScoredPairs {
        n_negative: total - n_positive,
        scores,
        positives,
        n_items: Some(n),
        n_positive,
        zero_norm_items: prep.zero_norm_items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    fn set(labels: &[&str], rows: Vec<Vec<f32>>) -> EmbeddingSet {
        EmbeddingSet::from_rows(labels.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn cosine_cases() {
        let c = |a: &[f32], b: &[f32]| cosine_similarity(arr1(a).view(), arr1(b).view()).unwrap();
        assert_eq!(c(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(c(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(c(&[2.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(c(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!(cosine_similarity(arr1(&[1.0f32]).view(), arr1(&[1.0f32, 2.0]).view()).is_err());
    }

    #[test]
    fn three_items_three_pairs() {
        let s = set(
            &["a", "a", "b"],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let p = pairwise_scores(&s).unwrap();
        assert_eq!(p.scores, vec![1.0, 0.0, 0.0]);
        assert_eq!(p.positives, vec![true, false, false]);
        assert_eq!((p.n_positive, p.n_negative, p.n_items), (1, 2, Some(3)));
    }

    #[test]
    fn too_few_items() {
        let s = set(&["a"], vec![vec![1.0]]);
        assert!(matches!(pairwise_scores(&s), Err(Error::Argument(_))));
    }

    #[test]
    fn zero_vectors_score_zero_and_are_counted() {
        let s = set(
            &["a", "a", "b"],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        );
        let p = pairwise_scores(&s).unwrap();
        assert_eq!(p.zero_norm_items, 1);
        assert_eq!(&p.scores[..2], &[0.0, 0.0]);
    }

    #[test]
    fn pair_index_is_row_major() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(pair_index(n, i, j), k);
                k += 1;
            }
        }
        assert_eq!(k, n_pairs(n));
        assert_eq!(n_pairs(4054), 8_215_431);
    }

    #[test]
    fn lane_dot_handles_remainders() {
        let a: Vec<f32> = (0..37).map(|i| i as f32 * 0.5).collect();
        let b: Vec<f32> = (0..37).map(|i| 1.0 - i as f32 * 0.01).collect();
        let direct: f64 = a.iter().zip(&b).map(|(x, y)| *x as f64 * *y as f64).sum();
        assert!((dot_lanes(&a, &b) - direct).abs() < 1e-4);
    }

    #[test]
    fn block_size_and_workers_do_not_change_bits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 97;
        let labels: Vec<String> = (0..n)
            .map(|_| format!("w{}", rng.random_range(0..9)))
            .collect();
        let v = Array2::from_shape_fn((n, 35), |_| rng.random::<f32>() - 0.5);
        let s = EmbeddingSet::new(labels, v).unwrap();
        let reference = pairwise_scores_with(
            &s,
            ScoringOptions {
                block_size: n,
                workers: 1,
            },
        )
        .unwrap();
        for (block_size, workers) in [(1, 1), (7, 3), (64, 2), (n, 4), (1000, 0)] {
            let p = pairwise_scores_with(
                &s,
                ScoringOptions {
                    block_size,
                    workers,
                },
            )
            .unwrap();
            let a: Vec<u64> = p.scores.iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = reference.scores.iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b, "block {block_size} workers {workers}");
            assert_eq!(p.positives, reference.positives);
        }
        // scores agree with the direct cosine
        let k = pair_index(n, 3, 50);
        let direct = cosine_similarity(s.vector(3), s.vector(50)).unwrap();
        assert!((reference.scores[k] - direct).abs() < 1e-6);
    }

    #[test]
    fn from_parts_validates() {
        assert!(ScoredPairs::from_parts(vec![0.1], vec![true, false]).is_err());
        assert!(ScoredPairs::from_parts(vec![f64::NAN], vec![true]).is_err());
        let p = ScoredPairs::from_parts(vec![0.1, 0.2], vec![true, false]).unwrap();
        assert_eq!((p.n_positive, p.n_negative, p.n_items), (1, 1, None));
    }
}
