//! Same-different word discrimination.
//!
//! Every pair of embeddings is scored by cosine similarity and labelled
//! "same" when the two tokens share a word type. The ranked list is
//! summarized by average precision and by AUC-ROC; both are always reported.

mod histogram;
mod metrics;
mod pairs;

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use histogram::{bucket_floor, bucket_of, HISTOGRAM_BUCKETS};
pub use metrics::{
    auc_roc, average_precision, curve_points, curves_csv, tie_groups, CurvePoint, TieGroup,
};
pub use pairs::{
    cosine_similarity, n_pairs, pair_index, pairwise_scores, pairwise_scores_with, ScoredPairs,
    ScoringOptions, DEFAULT_BLOCK_SIZE, ZERO_NORM,
};

use crate::embed::EmbeddingSet;
use crate::error::{Error, Result};

/// Pair count above which evaluation switches to the histogram path
/// (about 10^4 items).
pub const DEFAULT_MAX_MATERIALIZED_PAIRS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMethod {
    /// Every score kept and sorted.
    Exact,
    /// Scores quantized to [`HISTOGRAM_BUCKETS`] buckets.
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub scoring: ScoringOptions,
    pub max_materialized_pairs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            scoring: ScoringOptions::default(),
            max_materialized_pairs: DEFAULT_MAX_MATERIALIZED_PAIRS,
        }
    }
}

impl EvalOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.scoring.workers = workers;
        self
    }
}

/// Metrics and counts for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SameDiffResult {
    pub average_precision: f64,
    pub auc_roc: f64,
    pub n_items: usize,
    pub n_pairs: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    /// Embeddings with (near) zero norm, which score 0 against everything.
    pub zero_norm_items: usize,
    pub method: ScoringMethod,
    pub wall_time_s: f64,
}

impl SameDiffResult {
    /// Fraction of pairs that are positive: the expected AP of a random
    /// ranking, up to small-sample bias.
    pub fn positive_fraction(&self) -> f64 {
        self.n_positive as f64 / self.n_pairs as f64
    }
}

fn check_positives(set: &EmbeddingSet) -> Result<()> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in set.labels() {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    if counts.values().any(|&c| c >= 2) {
        return Ok(());
    }
    let mut names: Vec<&str> = counts.keys().copied().collect();
    names.sort_unstable();
    let preview = names.iter().take(5).copied().collect::<Vec<_>>().join(", ");
    let more = if names.len() > 5 { ", ..." } else { "" };
    Err(Error::UndefinedMetric(format!(
        "no positive pairs: {} items over {} distinct labels, each occurring once ({preview}{more})",
        set.len(),
        names.len()
    )))
}

pub fn evaluate(set: &EmbeddingSet) -> Result<SameDiffResult> {
    evaluate_with(set, EvalOptions::default())
}

/// Score all pairs and compute AP and AUC-ROC.
///
/// Sets with more than `max_materialized_pairs` pairs use the histogram
/// path.
pub fn evaluate_with(set: &EmbeddingSet, opts: EvalOptions) -> Result<SameDiffResult> {
    let start = Instant::now();
    if set.len() < 2 {
        return Err(Error::Argument(format!(
            "same-different evaluation needs at least 2 items, got {}",
            set.len()
        )));
    }
    check_positives(set)?;
    let total = n_pairs(set.len());
    let (groups, zero_norm_items, method) = if total <= opts.max_materialized_pairs {
        let scored = pairwise_scores_with(set, opts.scoring)?;
        (
            tie_groups(&scored),
            scored.zero_norm_items,
            ScoringMethod::Exact,
        )
    } else {
        let prep = pairs::Prepared::new(set);
        let groups = histogram::histogram_groups(&prep, opts.scoring)?;
        (groups, prep.zero_norm_items, ScoringMethod::Histogram)
    };
    let walk = metrics::walk(&groups);
    let n_positive = groups.iter().map(|g| g.positives).sum::<u64>() as usize;
    let result = SameDiffResult {
        average_precision: walk.average_precision()?,
        auc_roc: walk.auc_roc()?,
        n_items: set.len(),
        n_pairs: total,
        n_positive,
        n_negative: total - n_positive,
        zero_norm_items,
        method,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if zero_norm_items > 0 {
        log::warn!("{zero_norm_items} embeddings have zero norm and score 0 against all others");
    }
    Ok(result)
}

/// ROC and precision-recall points for a set, from the exact scores.
pub fn evaluation_curves(set: &EmbeddingSet, opts: ScoringOptions) -> Result<Vec<CurvePoint>> {
    let scored = pairwise_scores_with(set, opts)?;
    Ok(curve_points(&tie_groups(&scored)))
}
