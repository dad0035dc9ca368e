use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::roc::{check_scores, roc_auc};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeLongComparison {
    pub auc_a: f64,
    pub auc_b: f64,
    /// Estimated variance of `auc_a - auc_b`.
    pub variance: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0)
}

/// DeLong's test for two AUCs measured on the same samples.
///
/// The variance of the difference comes from the structural components
/// (placement values) of each estimator:
/// `var = (S10_aa + S10_bb - 2 S10_ab) / m + (S01_aa + S01_bb - 2 S01_ab) / n`
/// with `m` positives and `n` negatives. Needs at least two samples of each
/// class for the sample covariances to exist.
pub fn delong_test(scores_a: &[f64], scores_b: &[f64], labels: &[u8]) -> Result<DeLongComparison> {
    check_scores(scores_a, labels)?;
    check_scores(scores_b, labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::SingleClass {
            positives,
            negatives,
            required: 2,
        });
    }
    let a = roc_auc(scores_a, labels)?;
    let b = roc_auc(scores_b, labels)?;
    let (m, n) = (positives as f64, negatives as f64);
    let s10 = covariance(&a.placements_pos, &a.placements_pos) + covariance(&b.placements_pos, &b.placements_pos)
        - 2.0 * covariance(&a.placements_pos, &b.placements_pos);
    let s01 = covariance(&a.placements_neg, &a.placements_neg) + covariance(&b.placements_neg, &b.placements_neg)
        - 2.0 * covariance(&a.placements_neg, &b.placements_neg);
    let variance = (s10 / m + s01 / n).max(0.0);
    let diff = a.auc - b.auc;
    if diff == 0.0 {
        return Ok(DeLongComparison {
            auc_a: a.auc,
            auc_b: b.auc,
            variance,
            z: 0.0,
            p: 1.0,
        });
    }
    if variance <= 0.0 {
        return Err(Error::DegenerateVariance {
            auc_a: a.auc,
            auc_b: b.auc,
        });
    }
    let z = diff / variance.sqrt();
    Ok(DeLongComparison {
        auc_a: a.auc,
        auc_b: b.auc,
        variance,
        z,
        p: erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0),
    })
}
