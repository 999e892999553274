//! Brute-force reference implementations. Nothing here calls into the
//! library's numerical code; these exist to be slow and obviously correct.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// AP by direct enumeration: each positive's rank and true-positive count
/// are counted against every other pair. Within a tie, negatives come first;
/// tied positives keep their input order, which does not change the sum.
pub fn ap_by_enumeration(scores: &[f64], positives: &[bool]) -> f64 {
    let n_pos = positives.iter().filter(|&&p| p).count();
    let mut total = 0.0;
    for i in 0..scores.len() {
        if !positives[i] {
            continue;
        }
        let mut rank = 0usize;
        let mut tp = 0usize;
        for j in 0..scores.len() {
            let before =
                scores[j] > scores[i] || (scores[j] == scores[i] && (!positives[j] || j <= i));
            if before {
                rank += 1;
                if positives[j] {
                    tp += 1;
                }
            }
        }
        total += tp as f64 / rank as f64;
    }
    total / n_pos as f64
}

fn distinct_descending(scores: &[f64]) -> Vec<f64> {
    let mut t = scores.to_vec();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    t.dedup();
    t
}

/// AP from an explicit precision-recall sweep: at each distinct threshold
/// the newly admitted negatives are placed before the newly admitted
/// positives, and each positive contributes its precision.
pub fn ap_by_threshold_sweep(scores: &[f64], positives: &[bool]) -> f64 {
    let n_pos = positives.iter().filter(|&&p| p).count() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    for t in distinct_descending(scores) {
        let at: Vec<bool> = scores
            .iter()
            .zip(positives)
            .filter(|(s, _)| **s == t)
            .map(|(_, p)| *p)
            .collect();
        fp += at.iter().filter(|p| !**p).count();
        for _ in at.iter().filter(|p| **p) {
            tp += 1;
            area += (tp as f64 / (tp + fp) as f64) / n_pos;
        }
    }
    area
}

/// Trapezoidal area under the ROC curve traced by every distinct threshold.
pub fn auc_by_threshold_sweep(scores: &[f64], positives: &[bool]) -> f64 {
    let n_pos = positives.iter().filter(|&&p| p).count() as f64;
    let n_neg = positives.len() as f64 - n_pos;
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    for t in distinct_descending(scores) {
        let tp = scores
            .iter()
            .zip(positives)
            .filter(|(s, p)| **s >= t && **p)
            .count() as f64;
        let fp = scores
            .iter()
            .zip(positives)
            .filter(|(s, p)| **s >= t && !**p)
            .count() as f64;
        let (tpr, fpr) = (tp / n_pos, fp / n_neg);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area
}

/// Mann-Whitney by enumerating every positive/negative comparison.
pub fn auc_by_comparison(scores: &[f64], positives: &[bool]) -> f64 {
    let (mut wins, mut total) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positives[i] && !positives[j] {
                total += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / total
}

/// A random same-different instance over `n >= 3` items: labels drawn from a
/// few types, one score per upper-triangle pair, redrawn until both classes
/// occur. Half of the instances use scores on a coarse grid so that ties are
/// common.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    assert!(n >= 3, "fewer than 3 items cannot have both pair classes");
    let n_types = rng.random_range(2..=(n / 2).max(2));
    let coarse = rng.random_bool(0.5);
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_types)).collect();
        let mut scores = Vec::new();
        let mut positives = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let s: f64 = rng.random_range(-1.0..=1.0);
                scores.push(if coarse { (s * 5.0).round() / 5.0 } else { s });
                positives.push(labels[i] == labels[j]);
            }
        }
        let n_pos = positives.iter().filter(|&&p| p).count();
        if n_pos > 0 && n_pos < positives.len() {
            return (scores, positives);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues in descending order and the matching eigenvectors as rows.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance (divided by N - 1) of row-major data, two-pass.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    c.iter_mut().flatten().for_each(|x| *x /= n - 1.0);
    c
}

/// Sine of the largest principal angle between the row spaces of two
/// orthonormal `k x d` bases: the spectral norm of `B - (B A^T) A`.
pub fn max_principal_angle_sin(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let k = a.len();
    let d = a[0].len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let residual: Vec<Vec<f64>> = b
        .iter()
        .map(|bi| {
            let mut r = bi.clone();
            for aj in a {
                let c = dot(bi, aj);
                for t in 0..d {
                    r[t] -= c * aj[t];
                }
            }
            r
        })
        .collect();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&residual[i], &residual[j])).collect())
        .collect();
    let (values, _) = jacobi_eigen(&gram);
    values[0].max(0.0).sqrt()
}
