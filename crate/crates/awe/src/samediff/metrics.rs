//! Ranked-pair metrics.
//!
//! Both metrics are computed from the same walk: pairs grouped by equal
//! score, visited from the highest score down. Within a group, negatives are
//! ranked ahead of positives (pessimistic ties), which makes the result
//! independent of input order.

use rayon::prelude::*;
use serde::Serialize;

use super::pairs::ScoredPairs;
use crate::error::{Error, Result};

/// Pair counts sharing one score (or one histogram bucket).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieGroup {
    pub score: f64,
    pub positives: u64,
    pub negatives: u64,
}

/// Accumulates AP and AUC over tie groups visited in descending score order.
#[derive(Debug, Clone, Default)]
pub(crate) struct RankWalk {
    total_pos: u64,
    total_neg: u64,
    seen_pos: u64,
    seen_neg: u64,
    precision_sum: f64,
    /// Twice the Mann-Whitney count: 2 per win, 1 per tie.
    auc_twice: u128,
}

impl RankWalk {
    pub(crate) fn new(total_pos: u64, total_neg: u64) -> Self {
        RankWalk {
            total_pos,
            total_neg,
            ..Default::default()
        }
    }

    pub(crate) fn push(&mut self, g: TieGroup) {
        let ranked_before = self.seen_pos + self.seen_neg + g.negatives;
        for k in 1..=g.positives {
            self.precision_sum += (self.seen_pos + k) as f64 / (ranked_before + k) as f64;
        }
        let below = self.total_neg - self.seen_neg - g.negatives;
        self.auc_twice += g.positives as u128 * (2 * below as u128 + g.negatives as u128);
        self.seen_pos += g.positives;
        self.seen_neg += g.negatives;
    }

    pub(crate) fn average_precision(&self) -> Result<f64> {
        if self.total_pos == 0 {
            return Err(Error::UndefinedMetric(
                "average precision needs at least one positive pair".into(),
            ));
        }
        Ok(self.precision_sum / self.total_pos as f64)
    }

    pub(crate) fn auc_roc(&self) -> Result<f64> {
        if self.total_pos == 0 || self.total_neg == 0 {
            return Err(Error::UndefinedMetric(format!(
                "AUC-ROC needs both classes ({} positive, {} negative pairs)",
                self.total_pos, self.total_neg
            )));
        }
        Ok(self.auc_twice as f64 / (2.0 * self.total_pos as f64 * self.total_neg as f64))
    }
}

/// `-0.0` and `0.0` must fall in one tie group.
fn canonical(s: f64) -> f64 {
    s + 0.0
}

/// Tie groups of `pairs`, highest score first.
pub fn tie_groups(pairs: &ScoredPairs) -> Vec<TieGroup> {
    let mut pos: Vec<f64> = Vec::with_capacity(pairs.n_positive);
    let mut neg: Vec<f64> = Vec::with_capacity(pairs.n_negative);
    for (&s, &p) in pairs.scores.iter().zip(&pairs.positives) {
        if p {
            pos.push(canonical(s));
        } else {
            neg.push(canonical(s));
        }
    }
    let desc = |a: &f64, b: &f64| b.total_cmp(a);
    pos.par_sort_unstable_by(desc);
    neg.par_sort_unstable_by(desc);

    let mut groups = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < pos.len() || j < neg.len() {
        let score = match (pos.get(i), neg.get(j)) {
            (Some(&a), Some(&b)) => a.max(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let i0 = i;
        while i < pos.len() && pos[i] == score {
            i += 1;
        }
        let j0 = j;
        while j < neg.len() && neg[j] == score {
            j += 1;
        }
        groups.push(TieGroup {
            score,
            positives: (i - i0) as u64,
            negatives: (j - j0) as u64,
        });
    }
    groups
}

pub(crate) fn walk(groups: &[TieGroup]) -> RankWalk {
    let total_pos = groups.iter().map(|g| g.positives).sum();
    let total_neg = groups.iter().map(|g| g.negatives).sum();
    let mut w = RankWalk::new(total_pos, total_neg);
    for &g in groups {
        w.push(g);
    }
    w
}

/// Mean over positives of precision at the positive's rank, with scores
/// ranked descending and negatives ahead of positives on ties.
pub fn average_precision(pairs: &ScoredPairs) -> Result<f64> {
    walk(&tie_groups(pairs)).average_precision()
}

/// Fraction of (positive, negative) pairs where the positive scores higher,
/// ties counting one half.
pub fn auc_roc(pairs: &ScoredPairs) -> Result<f64> {
    walk(&tie_groups(pairs)).auc_roc()
}

/// One operating point: everything scoring at or above `threshold` is
/// called "same".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
}

/// ROC and precision-recall points, one per distinct score, highest first.
pub fn curve_points(groups: &[TieGroup]) -> Vec<CurvePoint> {
    let total_pos: u64 = groups.iter().map(|g| g.positives).sum();
    let total_neg: u64 = groups.iter().map(|g| g.negatives).sum();
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut tp, mut fp) = (0u64, 0u64);
    groups
        .iter()
        .map(|g| {
            tp += g.positives;
            fp += g.negatives;
            CurvePoint {
                threshold: g.score,
                true_positives: tp,
                false_positives: fp,
                tpr: ratio(tp, total_pos),
                fpr: ratio(fp, total_neg),
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, total_pos),
            }
        })
        .collect()
}

/// CSV with header `threshold,true_positives,false_positives,tpr,fpr,precision,recall`.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut out =
        String::from("threshold,true_positives,false_positives,tpr,fpr,precision,recall\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.threshold, p.true_positives, p.false_positives, p.tpr, p.fpr, p.precision, p.recall
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(items: &[(f64, bool)]) -> ScoredPairs {
        ScoredPairs::from_parts(
            items.iter().map(|x| x.0).collect(),
            items.iter().map(|x| x.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_separation() {
        let p = pairs(&[(1.0, true), (0.8, true), (0.6, false), (0.0, false)]);
        assert_eq!(average_precision(&p).unwrap(), 1.0);
        assert_eq!(auc_roc(&p).unwrap(), 1.0);
    }

    #[test]
    fn hand_ranked_precision() {
        let p = pairs(&[(0.9, true), (0.8, false), (0.7, true)]);
        assert_eq!(average_precision(&p).unwrap(), (1.0 + 2.0 / 3.0) / 2.0);
        assert_eq!(auc_roc(&p).unwrap(), 0.5);
    }

    #[test]
    fn pessimistic_ties() {
        let p = pairs(&[(1.0, false), (0.0, true), (0.0, false)]);
        assert_eq!(average_precision(&p).unwrap(), 1.0 / 3.0);
        // the positive beats nothing outright and ties one negative
        assert_eq!(auc_roc(&p).unwrap(), 0.25);
    }

    #[test]
    fn ties_with_negatives_break_perfect_ap() {
        let p = pairs(&[(0.5, true), (0.5, false)]);
        assert_eq!(average_precision(&p).unwrap(), 0.5);
        assert_eq!(auc_roc(&p).unwrap(), 0.5);
    }

    #[test]
    fn all_equal_scores() {
        let p = pairs(&[(0.3, true), (0.3, false), (0.3, true), (0.3, false)]);
        assert_eq!(auc_roc(&p).unwrap(), 0.5);
    }

    #[test]
    fn signed_zero_is_one_group() {
        let p = pairs(&[(-0.0, false), (0.0, true)]);
        assert_eq!(average_precision(&p).unwrap(), 0.5);
        assert_eq!(tie_groups(&p).len(), 1);
    }

    #[test]
    fn undefined_metrics() {
        let only_neg = pairs(&[(0.1, false)]);
        assert!(matches!(
            average_precision(&only_neg),
            Err(Error::UndefinedMetric(_))
        ));
        let only_pos = pairs(&[(0.1, true), (0.2, true)]);
        assert_eq!(average_precision(&only_pos).unwrap(), 1.0);
        assert!(matches!(auc_roc(&only_pos), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn curve_endpoints() {
        let p = pairs(&[(0.9, true), (0.8, false), (0.7, true)]);
        let pts = curve_points(&tie_groups(&p));
        assert_eq!(pts.len(), 3);
        assert_eq!((pts[0].tpr, pts[0].fpr, pts[0].precision), (0.5, 0.0, 1.0));
        let last = pts.last().unwrap();
        assert_eq!((last.tpr, last.fpr, last.recall), (1.0, 1.0, 1.0));
        let csv = curves_csv(&pts);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("threshold,"));
    }

    fn instance() -> impl Strategy<Value = Vec<(f64, bool)>> {
        // coarse score grid forces ties
        proptest::collection::vec(
            ((0i32..12).prop_map(|v| v as f64 / 4.0 - 1.0), any::<bool>()),
            2..60,
        )
        .prop_filter("needs both classes", |v| {
            v.iter().any(|x| x.1) && v.iter().any(|x| !x.1)
        })
    }

    proptest! {
        #[test]
        fn permutation_invariant(items in instance(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = items.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (a, b) = (pairs(&items), pairs(&shuffled));
            prop_assert_eq!(average_precision(&a).unwrap(), average_precision(&b).unwrap());
            prop_assert_eq!(auc_roc(&a).unwrap(), auc_roc(&b).unwrap());
        }

        #[test]
        fn monotone_transform_invariant(items in instance()) {
            let mapped: Vec<(f64, bool)> = items.iter().map(|&(s, p)| ((3.0 * s).exp() - 7.0, p)).collect();
            let (a, b) = (pairs(&items), pairs(&mapped));
            prop_assert_eq!(average_precision(&a).unwrap(), average_precision(&b).unwrap());
            prop_assert_eq!(auc_roc(&a).unwrap(), auc_roc(&b).unwrap());
        }

        #[test]
        fn ap_is_one_iff_strictly_separated(items in instance()) {
            let p = pairs(&items);
            let min_pos = items.iter().filter(|x| x.1).map(|x| x.0).fold(f64::INFINITY, f64::min);
            let max_neg = items.iter().filter(|x| !x.1).map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
            let ap = average_precision(&p).unwrap();
            prop_assert_eq!(ap == 1.0, min_pos > max_neg);
            prop_assert!((0.0..=1.0).contains(&ap));
        }
    }
}
