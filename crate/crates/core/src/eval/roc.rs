use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct threshold.
    pub points: Vec<(f64, f64)>,
    /// Per positive: fraction of negatives it outscores, ties counted ½.
    pub placements_pos: Vec<f64>,
    /// Per negative: fraction of positives that outscore it, ties counted ½.
    pub placements_neg: Vec<f64>,
}

pub(crate) fn check_scores(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if let Some((index, &value)) = scores.iter().enumerate().find(|(_, s)| s.is_nan()) {
        return Err(Error::InvalidScore { index, value });
    }
    Ok(())
}

pub(crate) fn split_by_label(scores: &[f64], labels: &[u8]) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &l) in scores.iter().zip(labels) {
        if l == 1 {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    (pos, neg)
}

/// For each `x` in `xs`, twice the number of `sorted` values below `x` plus
/// the number equal to it. `sorted` must be ascending.
fn twice_counts_below(xs: &[f64], sorted: &[f64]) -> Vec<u64> {
    xs.iter()
        .map(|&x| {
            let below = sorted.partition_point(|&y| y < x);
            let not_above = sorted.partition_point(|&y| y <= x);
            (2 * below + (not_above - below)) as u64
        })
        .collect()
}

/// AUC as the Mann-Whitney statistic with ties counted ½, plus ROC points
/// and the placement values used by DeLong's test.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocResult> {
    check_scores(scores, labels)?;
    let (pos, neg) = split_by_label(scores, labels);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass {
            positives: pos.len(),
            negatives: neg.len(),
            required: 1,
        });
    }
    let mut pos_sorted = pos.clone();
    pos_sorted.sort_by(f64::total_cmp);
    let mut neg_sorted = neg.clone();
    neg_sorted.sort_by(f64::total_cmp);

    let (m, n) = (pos.len(), neg.len());
    let pos_twice = twice_counts_below(&pos, &neg_sorted);
    let twice_u: u64 = pos_twice.iter().sum();
    let auc = twice_u as f64 / (2 * m as u64 * n as u64) as f64;

    let placements_pos = pos_twice.iter().map(|&c| c as f64 / (2 * n) as f64).collect();
    let placements_neg = neg
        .iter()
        .map(|&y| {
            let not_above = pos_sorted.partition_point(|&x| x <= y);
            let below = pos_sorted.partition_point(|&x| x < y);
            let twice_above = 2 * (m - not_above) + (not_above - below);
            twice_above as f64 / (2 * m) as f64
        })
        .collect();

    Ok(RocResult {
        auc,
        n_pos: m,
        n_neg: n,
        points: roc_points(&pos_sorted, &neg_sorted),
        placements_pos,
        placements_neg,
    })
}

/// Sweeps thresholds from high to low over ascending-sorted class scores.
fn roc_points(pos: &[f64], neg: &[f64]) -> Vec<(f64, f64)> {
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut i, mut j) = (pos.len(), neg.len());
    while i > 0 || j > 0 {
        let t = match (i > 0, j > 0) {
            (true, true) => pos[i - 1].max(neg[j - 1]),
            (true, false) => pos[i - 1],
            _ => neg[j - 1],
        };
        while i > 0 && pos[i - 1] >= t {
            i -= 1;
        }
        while j > 0 && neg[j - 1] >= t {
            j -= 1;
        }
        points.push(((neg.len() - j) as f64 / n, (pos.len() - i) as f64 / m));
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_tied() {
        let r = roc_auc(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc_auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn hand_computed_with_tie() {
        // positives {3, 1}, negatives {2, 1}: pairs 3>2, 3>1, 1<2, 1=1 -> (1 + 1 + 0 + 0.5) / 4
        let r = roc_auc(&[3.0, 1.0, 2.0, 1.0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.auc, 0.625);
        assert_eq!(r.placements_pos, vec![1.0, 0.25]);
        assert_eq!(r.placements_neg, vec![0.5, 0.75]);
        assert_eq!(r.points, vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (1.0, 1.0)]);
    }

    #[test]
    fn single_class_and_nan_rejected() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass { .. })));
        assert!(matches!(roc_auc(&[0.1, f64::NAN], &[1, 0]), Err(Error::InvalidScore { index: 1, .. })));
        assert!(roc_auc(&[0.1], &[1, 0]).is_err());
    }
}
