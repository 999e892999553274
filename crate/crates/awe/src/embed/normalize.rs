use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to every per-dimension scale.
pub const NORMALIZER_EPSILON: f64 = 1e-8;

/// What frames are divided by after mean subtraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Population standard deviation (z-scoring).
    #[default]
    StdDev,
    /// Population variance, for the literal "divide by the variance" reading.
    Variance,
}

/// Per-dimension frame standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub epsilon: f64,
    pub mode: ScaleMode,
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / scale`, row by row.
    pub fn apply(&self, frames: ArrayView2<'_, f32>) -> Result<Array2<f32>> {
        if frames.ncols() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                found: frames.ncols(),
            });
        }
        let mut out = Array2::<f32>::zeros(frames.raw_dim());
        for (mut o, row) in out.outer_iter_mut().zip(frames.outer_iter()) {
            Zip::from(&mut o)
                .and(&row)
                .and(&self.mean[..])
                .and(&self.scale[..])
                .for_each(|o, &x, &m, &s| *o = ((x as f64 - m) / s) as f32);
        }
        Ok(out)
    }
}

/// Fit mean and scale over every row of every supplied matrix.
///
/// Statistics are accumulated in f64 with a streaming (Welford) update; the
/// scale is the population standard deviation (or variance) floored at
/// [`NORMALIZER_EPSILON`].
pub fn fit_normalizer<'a, I>(frames: I, mode: ScaleMode) -> Result<Normalizer>
where
    I: IntoIterator<Item = ArrayView2<'a, f32>>,
{
    let mut count = 0u64;
    let mut mean: Vec<f64> = Vec::new();
    let mut m2: Vec<f64> = Vec::new();
    for block in frames {
        if count == 0 && mean.is_empty() {
            mean = vec![0.0; block.ncols()];
            m2 = vec![0.0; block.ncols()];
        } else if block.ncols() != mean.len() {
            return Err(Error::Shape {
                expected: mean.len(),
                found: block.ncols(),
            });
        }
        for row in block.outer_iter() {
            count += 1;
            let n = count as f64;
            for ((m, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(row.iter()) {
                let x = x as f64;
                let delta = x - *m;
                *m += delta / n;
                *s += delta * (x - *m);
            }
        }
    }
    if count == 0 {
        return Err(Error::Argument(
            "cannot fit a normalizer on zero frames".into(),
        ));
    }
    let n = count as f64;
    let scale = m2
        .iter()
        .map(|&s| {
            let var = (s / n).max(0.0);
            let v = match mode {
                ScaleMode::StdDev => var.sqrt(),
                ScaleMode::Variance => var,
            };
            v.max(NORMALIZER_EPSILON)
        })
        .collect();
    Ok(Normalizer {
        mean,
        scale,
        epsilon: NORMALIZER_EPSILON,
        mode,
    })
}
