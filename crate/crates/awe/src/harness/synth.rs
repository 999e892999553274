//! Synthetic corpora with a known amount of word-type structure.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    AlignmentTable, FeatureArchive, WordSegment, DEFAULT_FRAME_RATE_HZ, DEFAULT_MIN_DURATION_S,
};
use crate::error::{Error, Result};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_types: usize,
    pub tokens_per_type: usize,
    pub dim: usize,
    /// Inclusive token length range in frames.
    pub min_frames: usize,
    pub max_frames: usize,
    /// Scale of the per-type mean relative to unit frame noise.
    pub separation: f64,
    pub seed: u64,
    pub frame_rate_hz: f64,
    /// Smallest allowed angle between two type means, in degrees.
    pub min_angle_deg: f64,
    pub words_per_utterance: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_types: 20,
            tokens_per_type: 10,
            dim: 32,
            min_frames: 25,
            max_frames: 60,
            separation: 10.0,
            seed: 0,
            frame_rate_hz: DEFAULT_FRAME_RATE_HZ,
            min_angle_deg: 30.0,
            words_per_utterance: 8,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Argument(m));
        if self.n_types < 2 {
            return fail(format!("need at least 2 word types, got {}", self.n_types));
        }
        if self.tokens_per_type < 2 {
            return fail(format!(
                "need at least 2 tokens per type, got {}",
                self.tokens_per_type
            ));
        }
        if self.dim == 0 {
            return fail("dim must be positive".into());
        }
        if self.min_frames == 0 || self.min_frames > self.max_frames {
            return fail(format!(
                "invalid frame range [{}, {}]",
                self.min_frames, self.max_frames
            ));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return fail(format!("separation must be >= 0, got {}", self.separation));
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return fail(format!(
                "frame rate must be positive, got {}",
                self.frame_rate_hz
            ));
        }
        if (self.min_frames as f64) / self.frame_rate_hz + 1e-9 < DEFAULT_MIN_DURATION_S {
            return fail(format!(
                "min_frames {} at {} Hz is shorter than {} s, tokens would fail the word filter",
                self.min_frames, self.frame_rate_hz, DEFAULT_MIN_DURATION_S
            ));
        }
        if !(0.0..=180.0).contains(&self.min_angle_deg) {
            return fail(format!(
                "min_angle_deg must be in [0, 180], got {}",
                self.min_angle_deg
            ));
        }
        if self.words_per_utterance == 0 {
            return fail("words_per_utterance must be positive".into());
        }
        Ok(())
    }
}

/// Name of word type `i` (0-based): `w0001`, `w0002`, ...
pub fn synth_word(i: usize) -> String {
    format!("w{:04}", i + 1)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Unit-norm type means, each at least `min_angle_deg` from every other.
fn type_means(p: &SynthParams, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let max_cos = p.min_angle_deg.to_radians().cos();
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(p.n_types);
    for t in 0..p.n_types {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let mut v: Vec<f64> = (0..p.dim).map(|_| gaussian(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let ok = means
                .iter()
                .all(|m| m.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() <= max_cos);
            if ok {
                means.push(v);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Argument(format!(
                "could not place type {t} of {} at least {} degrees apart in {} dimensions",
                p.n_types, p.min_angle_deg, p.dim
            )));
        }
    }
    Ok(means)
}

/// Generate an archive and matching alignments.
///
/// Each token is `mean * separation + N(0, I)` per frame, for a random number
/// of frames in the configured range. Tokens are shuffled and packed into
/// utterances separated by short noise gaps; every token passes the default
/// word filter. Output is fully determined by the parameters.
pub fn generate_synthetic(p: &SynthParams) -> Result<(FeatureArchive, AlignmentTable)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let means = type_means(p, &mut rng)?;

    let mut tokens: Vec<usize> = (0..p.n_types)
        .flat_map(|t| std::iter::repeat_n(t, p.tokens_per_type))
        .collect();
    tokens.shuffle(&mut rng);

    let mut archive = FeatureArchive::new(p.dim, p.frame_rate_hz)?;
    let mut segments = Vec::with_capacity(tokens.len());
    for (u, chunk) in tokens.chunks(p.words_per_utterance).enumerate() {
        let utt = format!("utt{:05}", u + 1);
        let mut rows: Vec<f32> = Vec::new();
        let mut n_rows = 0usize;
        let noise_frames = |rows: &mut Vec<f32>, rng: &mut ChaCha8Rng, n: usize| {
            for _ in 0..n * p.dim {
                rows.push(gaussian(rng) as f32);
            }
        };
        for &t in chunk {
            let gap = rng.random_range(1..=3);
            noise_frames(&mut rows, &mut rng, gap);
            n_rows += gap;
            let len = rng.random_range(p.min_frames..=p.max_frames);
            let start = n_rows;
            for _ in 0..len {
                for &m in &means[t] {
                    rows.push((m * p.separation + gaussian(&mut rng)) as f32);
                }
            }
            n_rows += len;
            segments.push(WordSegment::new(
                utt.clone(),
                &synth_word(t),
                start as f64 / p.frame_rate_hz,
                (start + len) as f64 / p.frame_rate_hz,
            )?);
        }
        noise_frames(&mut rows, &mut rng, 2);
        n_rows += 2;
        let frames = Array2::from_shape_vec((n_rows, p.dim), rows).expect("row count tracked");
        archive.insert(utt, frames)?;
    }
    Ok((archive, AlignmentTable::new(segments)))
}
