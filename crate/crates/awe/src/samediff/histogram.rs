//! Bounded-memory scoring for sets too large to materialize every pair.
//!
//! Scores are streamed tile by tile into per-class counts over
//! [`HISTOGRAM_BUCKETS`] equal-width buckets on `[-1, 1]`. Each bucket is then
//! treated as one tie group, so the metrics equal those of the exact path run
//! on scores quantized to the bucket grid (width `2^-15`).

use rayon::prelude::*;

use super::metrics::TieGroup;
use super::pairs::{with_workers, Prepared, ScoringOptions};
use crate::error::Result;

pub const HISTOGRAM_BUCKETS: usize = 1 << 16;

/// Bucket of a score; scores outside `[-1, 1]` (rounding) clamp to the ends.
pub fn bucket_of(score: f64) -> usize {
    let b = ((score + 1.0) * 0.5 * HISTOGRAM_BUCKETS as f64).floor();
    b.clamp(0.0, (HISTOGRAM_BUCKETS - 1) as f64) as usize
}

/// Lower edge of bucket `b`.
pub fn bucket_floor(b: usize) -> f64 {
    b as f64 * 2.0 / HISTOGRAM_BUCKETS as f64 - 1.0
}

#[derive(Clone)]
struct Counts {
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Counts {
    fn new() -> Self {
        Counts {
            pos: vec![0; HISTOGRAM_BUCKETS],
            neg: vec![0; HISTOGRAM_BUCKETS],
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.pos.iter_mut().zip(other.pos) {
            *a += b;
        }
        for (a, b) in self.neg.iter_mut().zip(other.neg) {
            *a += b;
        }
        self
    }
}

/// Tie groups (one per non-empty bucket, highest first) for all pairs.
pub(crate) fn histogram_groups(prep: &Prepared, opts: ScoringOptions) -> Result<Vec<TieGroup>> {
    let n = prep.n();
    let block = opts.block_size.max(1);
    let starts: Vec<usize> = (0..n.saturating_sub(1)).step_by(block).collect();
    // Integer counts: the merge order cannot change the result.
    let counts = with_workers(opts.workers, || {
        starts
            .into_par_iter()
            .map(|i0| {
                let mut c = Counts::new();
                let rows = i0..(i0 + block).min(n - 1);
                prep.for_pairs_in_rows(rows, block, |i, j, s| {
                    let b = bucket_of(s);
                    if prep.label_ids[i] == prep.label_ids[j] {
                        c.pos[b] += 1;
                    } else {
                        c.neg[b] += 1;
                    }
                });
                c
            })
            .reduce(Counts::new, Counts::merge)
    })?;
    Ok((0..HISTOGRAM_BUCKETS)
        .rev()
        .filter(|&b| counts.pos[b] + counts.neg[b] > 0)
        .map(|b| TieGroup {
            score: bucket_floor(b),
            positives: counts.pos[b],
            negatives: counts.neg[b],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_edges() {
        assert_eq!(bucket_of(-1.0), 0);
        assert_eq!(bucket_of(-1.5), 0);
        assert_eq!(bucket_of(1.0), HISTOGRAM_BUCKETS - 1);
        assert_eq!(bucket_of(1.0 + 1e-7), HISTOGRAM_BUCKETS - 1);
        assert_eq!(bucket_of(0.0), HISTOGRAM_BUCKETS / 2);
        assert_eq!(bucket_floor(HISTOGRAM_BUCKETS / 2), 0.0);
        let width = bucket_floor(1) - bucket_floor(0);
        assert_eq!(width, 2f64.powi(-15));
    }
}
