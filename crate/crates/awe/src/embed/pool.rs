use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SUBSAMPLE_FRAMES: usize = 10;

/// How a variable-length frame matrix becomes one fixed-length vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolingMethod {
    Mean,
    Sum,
    /// Element-wise maximum over frames.
    Max,
    /// `n_samples` equally spaced frames, concatenated in temporal order.
    Subsample {
        #[serde(default = "default_n_samples")]
        n_samples: usize,
    },
}

fn default_n_samples() -> usize {
    DEFAULT_SUBSAMPLE_FRAMES
}

impl PoolingMethod {
    pub fn subsample(n_samples: usize) -> Result<Self> {
        let m = PoolingMethod::Subsample { n_samples };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PoolingMethod::Subsample { n_samples: 0 } => Err(Error::Argument(
                "subsample pooling needs at least one frame".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Length of the pooled vector for `frame_dim`-wide frames.
    pub fn output_dim(&self, frame_dim: usize) -> usize {
        match self {
            PoolingMethod::Subsample { n_samples } => n_samples * frame_dim,
            _ => frame_dim,
        }
    }
}

impl fmt::Display for PoolingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolingMethod::Mean => f.write_str("mean"),
            PoolingMethod::Sum => f.write_str("sum"),
            PoolingMethod::Max => f.write_str("max"),
            PoolingMethod::Subsample { n_samples } => write!(f, "subsample{n_samples}"),
        }
    }
}

impl FromStr for PoolingMethod {
    type Err = Error;

    /// Accepts `mean`, `sum`, `max`, `sub`/`subsample` and `subsampleN`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "mean" => Ok(PoolingMethod::Mean),
            "sum" => Ok(PoolingMethod::Sum),
            "max" | "argmax" => Ok(PoolingMethod::Max),
            "sub" | "subsample" => Ok(PoolingMethod::Subsample {
                n_samples: DEFAULT_SUBSAMPLE_FRAMES,
            }),
            other => other
                .strip_prefix("subsample")
                .or_else(|| other.strip_prefix("sub"))
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| Error::Argument(format!("unknown pooling method {s:?}")))
                .and_then(PoolingMethod::subsample),
        }
    }
}

/// Frame indices picked by subsampling `n` of `t` frames:
/// `round(i * (t - 1) / (n - 1))`, rounding half away from zero. A single
/// sample takes the middle frame.
pub fn subsample_indices(t: usize, n: usize) -> Vec<usize> {
    assert!(t >= 1 && n >= 1);
    if n == 1 {
        return vec![((t - 1) as f64 / 2.0).round() as usize];
    }
    let last = (t - 1) as f64;
    let steps = (n - 1) as f64;
    (0..n)
        .map(|i| ((i as f64 * last / steps).round() as usize).min(t - 1))
        .collect()
}

/// Pool a `T x D` matrix into one vector.
///
/// Sums are accumulated in f64. Mean pooling is the f32 sum divided by `T`,
/// so `mean == sum / T` holds exactly.
pub fn pool(frames: ArrayView2<'_, f32>, method: PoolingMethod) -> Result<Vec<f32>> {
    method.validate()?;
    let t = frames.nrows();
    if t == 0 {
        return Err(Error::Argument("cannot pool an empty segment".into()));
    }
    let d = frames.ncols();
    let out = match method {
        PoolingMethod::Sum | PoolingMethod::Mean => {
            let mut acc = vec![0.0f64; d];
            for row in frames.outer_iter() {
                for (a, &x) in acc.iter_mut().zip(row.iter()) {
                    *a += x as f64;
                }
            }
            let sum = acc.into_iter().map(|a| a as f32);
            if method == PoolingMethod::Mean {
                let tf = t as f32;
                sum.map(|s| s / tf).collect()
            } else {
                sum.collect()
            }
        }
        PoolingMethod::Max => {
            let mut acc = frames.row(0).to_vec();
            for row in frames.outer_iter().skip(1) {
                for (a, &x) in acc.iter_mut().zip(row.iter()) {
                    if x > *a {
                        *a = x;
                    }
                }
            }
            acc
        }
        PoolingMethod::Subsample { n_samples } => {
            let mut out = Vec::with_capacity(n_samples * d);
            for idx in subsample_indices(t, n_samples) {
                out.extend(frames.row(idx).iter().copied());
            }
            out
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn two_row_arithmetic() {
        let f = array![[1.0f32, 3.0], [3.0, 5.0]];
        assert_eq!(pool(f.view(), PoolingMethod::Mean).unwrap(), vec![2.0, 4.0]);
        assert_eq!(pool(f.view(), PoolingMethod::Sum).unwrap(), vec![4.0, 8.0]);
        assert_eq!(pool(f.view(), PoolingMethod::Max).unwrap(), vec![3.0, 5.0]);
    }

    #[test]
    fn subsample_all_frames_is_identity() {
        let f = Array2::from_shape_fn((10, 1024), |(i, j)| (i * 1024 + j) as f32);
        let v = pool(f.view(), PoolingMethod::Subsample { n_samples: 10 }).unwrap();
        assert_eq!(v.len(), 10240);
        assert_eq!(v, f.iter().copied().collect::<Vec<_>>());
    }

    #[test]
    fn subsample_repeats_short_segments() {
        assert_eq!(subsample_indices(5, 10), vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
        let f = array![[0.0f32], [1.0], [2.0], [3.0], [4.0]];
        let v = pool(f.view(), PoolingMethod::Subsample { n_samples: 10 }).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn subsample_single_sample_takes_middle() {
        assert_eq!(subsample_indices(5, 1), vec![2]);
        assert_eq!(subsample_indices(4, 1), vec![2]);
        assert_eq!(subsample_indices(1, 1), vec![0]);
    }

    #[test]
    fn empty_and_zero_samples_rejected() {
        let f = Array2::<f32>::zeros((0, 3));
        assert!(pool(f.view(), PoolingMethod::Mean).is_err());
        let g = Array2::<f32>::zeros((2, 3));
        assert!(pool(g.view(), PoolingMethod::Subsample { n_samples: 0 }).is_err());
    }

    #[test]
    fn single_frame_pools_to_itself() {
        let f = array![[1.5f32, -2.0, 0.25]];
        for m in [PoolingMethod::Mean, PoolingMethod::Sum, PoolingMethod::Max] {
            assert_eq!(pool(f.view(), m).unwrap(), vec![1.5, -2.0, 0.25]);
        }
        let v = pool(f.view(), PoolingMethod::Subsample { n_samples: 3 }).unwrap();
        assert_eq!(v, [1.5, -2.0, 0.25].repeat(3));
    }

    #[test]
    fn subsample_is_order_sensitive() {
        let f = array![[0.0f32], [1.0], [5.0], [2.0]];
        let mut r = f.clone();
        r.invert_axis(ndarray::Axis(0));
        let m = PoolingMethod::Subsample { n_samples: 4 };
        assert_ne!(pool(f.view(), m).unwrap(), pool(r.view(), m).unwrap());
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "mean".parse::<PoolingMethod>().unwrap(),
            PoolingMethod::Mean
        );
        assert_eq!(
            "argmax".parse::<PoolingMethod>().unwrap(),
            PoolingMethod::Max
        );
        assert_eq!(
            "sub".parse::<PoolingMethod>().unwrap(),
            PoolingMethod::Subsample { n_samples: 10 }
        );
        assert_eq!(
            "subsample4".parse::<PoolingMethod>().unwrap(),
            PoolingMethod::Subsample { n_samples: 4 }
        );
        assert!("median".parse::<PoolingMethod>().is_err());
        assert!("subsample0".parse::<PoolingMethod>().is_err());
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&PoolingMethod::Subsample { n_samples: 10 }).unwrap();
        assert_eq!(json, r#"{"kind":"subsample","n_samples":10}"#);
        let m: PoolingMethod = serde_json::from_str(r#"{"kind":"subsample"}"#).unwrap();
        assert_eq!(m, PoolingMethod::Subsample { n_samples: 10 });
        let m: PoolingMethod = serde_json::from_str(r#"{"kind":"max"}"#).unwrap();
        assert_eq!(m, PoolingMethod::Max);
    }

    fn matrix() -> impl Strategy<Value = Array2<f32>> {
        (1usize..40, 1usize..6).prop_flat_map(|(t, d)| {
            proptest::collection::vec(-1e3f32..1e3, t * d)
                .prop_map(move |v| Array2::from_shape_vec((t, d), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mean_is_sum_over_t(f in matrix()) {
            let mean = pool(f.view(), PoolingMethod::Mean).unwrap();
            let sum = pool(f.view(), PoolingMethod::Sum).unwrap();
            let t = f.nrows() as f32;
            for (m, s) in mean.iter().zip(&sum) {
                prop_assert_eq!(m.to_bits(), (s / t).to_bits());
            }
        }

        #[test]
        fn max_dominates_mean(f in matrix()) {
            let mean = pool(f.view(), PoolingMethod::Mean).unwrap();
            let max = pool(f.view(), PoolingMethod::Max).unwrap();
            prop_assert!(max.iter().zip(&mean).all(|(a, b)| a >= b));
        }

        #[test]
        fn indices_are_monotone(t in 1usize..200, n in 1usize..30) {
            let idx = subsample_indices(t, n);
            prop_assert_eq!(idx.len(), n);
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
            if t >= n {
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            }
            if n >= 2 {
                prop_assert_eq!(idx[0], 0);
                prop_assert_eq!(idx[n - 1], t - 1);
            }
        }

        #[test]
        fn order_free_pools_ignore_permutation(f in matrix(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..f.nrows()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = f.select(ndarray::Axis(0), &order);
            prop_assert_eq!(pool(f.view(), PoolingMethod::Max).unwrap(), pool(p.view(), PoolingMethod::Max).unwrap());
            // f64 accumulation of f32 inputs is exact for these magnitudes
            // only up to rounding, so compare with a tight tolerance.
            for m in [PoolingMethod::Mean, PoolingMethod::Sum] {
                let a = pool(f.view(), m).unwrap();
                let b = pool(p.view(), m).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
                }
            }
        }
    }
}
