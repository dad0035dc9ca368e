use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-feature z-score statistics computed over observed training values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Variance convention used for `std`; always `"population"` for fitted normalizers.
    pub convention: String,
}

impl Normalizer {
    /// Pass-through statistics for data that is already normalized.
    pub fn identity(feature_names: Vec<String>) -> Self {
        let d = feature_names.len();
        Normalizer {
            feature_names,
            mean: vec![0.0; d],
            std: vec![1.0; d],
            convention: "identity".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, feature: usize, value: f64) -> f64 {
        (value - self.mean[feature]) / self.std[feature]
    }

    pub fn denormalize(&self, feature: usize, value: f64) -> f64 {
        value * self.std[feature] + self.mean[feature]
    }
}

pub fn fit_normalizer(train: &Dataset) -> Result<Normalizer> {
    let d = train.dim();
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    for f in 0..d {
        let observed: Vec<f64> = train
            .records
            .iter()
            .filter(|r| r.known[f])
            .map(|r| r.values[f])
            .collect();
        let name = train.feature_names[f].clone();
        if observed.len() < 2 {
            return Err(Error::TooFewObservations {
                feature: name,
                observed: observed.len(),
            });
        }
        let n = observed.len() as f64;
        let m = observed.iter().sum::<f64>() / n;
        let var = observed.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        if s.is_nan() || s <= 0.0 || s <= 1e-12 * m.abs() {
            return Err(Error::ZeroVariance { feature: name });
        }
        mean[f] = m;
        std[f] = s;
    }
    Ok(Normalizer {
        feature_names: train.feature_names.clone(),
        mean,
        std,
        convention: "population".into(),
    })
}

/// Maps observed values to `(v - mean) / std` and missing values to exactly 0.
pub fn apply_normalizer(ds: &Dataset, n: &Normalizer) -> Result<Dataset> {
    if n.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            got: ds.dim(),
        });
    }
    let mut out = ds.clone();
    for r in &mut out.records {
        for (f, (v, &k)) in r.values.iter_mut().zip(&r.known).enumerate() {
            *v = if k && !ds.normalized { n.normalize(f, *v) } else if k { *v } else { 0.0 };
        }
    }
    out.normalized = true;
    Ok(out)
}
