use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, SplitTag};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Per-view quota: `per_label` positives and `per_label` negatives with this view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewQuota {
    pub view: String,
    pub per_label: usize,
}

/// How many validation records to draw from each (view, label) stratum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationLayout {
    Balanced { per_label: usize },
    ByView { quotas: Vec<ViewQuota> },
}

impl ValidationLayout {
    /// Label-balanced layout of `n_val` records; `n_val` must be even.
    pub fn balanced(n_val: usize) -> Result<Self> {
        if !n_val.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("validation size {n_val} is not even")));
        }
        Ok(ValidationLayout::Balanced { per_label: n_val / 2 })
    }

    /// 43/43 PA plus 8/8 AP when every record carries a view, otherwise 51/51 by label.
    pub fn default_for(ds: &Dataset) -> Self {
        if !ds.is_empty() && ds.records.iter().all(|r| r.view.is_some()) {
            ValidationLayout::ByView {
                quotas: vec![
                    ViewQuota { view: "PA".into(), per_label: 43 },
                    ViewQuota { view: "AP".into(), per_label: 8 },
                ],
            }
        } else {
            ValidationLayout::Balanced { per_label: 51 }
        }
    }

    pub fn total(&self) -> usize {
        match self {
            ValidationLayout::Balanced { per_label } => 2 * per_label,
            ValidationLayout::ByView { quotas } => quotas.iter().map(|q| 2 * q.per_label).sum(),
        }
    }
}

/// Subject ids on each side of a split, for the split sidecar file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMembership {
    pub seed: u64,
    pub layout: ValidationLayout,
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

impl SplitMembership {
    pub fn of(seed: u64, layout: &ValidationLayout, train: &Dataset, val: &Dataset) -> Self {
        SplitMembership {
            seed,
            layout: layout.clone(),
            train: train.records.iter().map(|r| r.subject_id.clone()).collect(),
            validation: val.records.iter().map(|r| r.subject_id.clone()).collect(),
        }
    }
}

/// Draws a stratified validation set. Both outputs keep the input record order,
/// are disjoint, and together contain every input record.
pub fn split_validation(ds: &Dataset, seed: u64, layout: &ValidationLayout) -> Result<(Dataset, Dataset)> {
    let strata: Vec<(Option<&str>, usize)> = match layout {
        ValidationLayout::Balanced { per_label } => vec![(None, *per_label)],
        ValidationLayout::ByView { quotas } => quotas.iter().map(|q| (Some(q.view.as_str()), q.per_label)).collect(),
    };
    let mut rng = rng_from_seed(seed);
    let mut chosen = vec![false; ds.len()];
    for (view, per_label) in strata {
        for label in [1u8, 0u8] {
            let mut pool: Vec<usize> = ds
                .records
                .iter()
                .enumerate()
                .filter(|(i, r)| {
                    !chosen[*i]
                        && r.label == label
                        && view.is_none_or(|v| r.view.as_deref().is_some_and(|rv| rv.eq_ignore_ascii_case(v)))
                })
                .map(|(i, _)| i)
                .collect();
            if pool.len() < per_label {
                return Err(Error::InsufficientStratum {
                    stratum: format!("view={} label={label}", view.unwrap_or("*")),
                    available: pool.len(),
                    requested: per_label,
                });
            }
            pool.shuffle(&mut rng);
            for &i in &pool[..per_label] {
                chosen[i] = true;
            }
        }
    }
    let val_idx: Vec<usize> = (0..ds.len()).filter(|&i| chosen[i]).collect();
    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| !chosen[i]).collect();
    Ok((ds.select(&train_idx, SplitTag::Train), ds.select(&val_idx, SplitTag::Validation)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureRecord;

    fn ds(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| FeatureRecord {
                subject_id: format!("s{i}"),
                values: vec![i as f64],
                known: vec![true],
                label: (i % 3 == 0) as u8,
                view: Some(if i % 5 == 0 { "AP" } else { "PA" }.to_string()),
            })
            .collect();
        Dataset::new(vec!["x".into()], records, SplitTag::Train, false).unwrap()
    }

    #[test]
    fn view_layout_counts() {
        let d = ds(300);
        let layout = ValidationLayout::ByView {
            quotas: vec![
                ViewQuota { view: "PA".into(), per_label: 10 },
                ViewQuota { view: "AP".into(), per_label: 4 },
            ],
        };
        let (train, val) = split_validation(&d, 1, &layout).unwrap();
        assert_eq!(val.len(), 28);
        assert_eq!(train.len() + val.len(), 300);
        let count = |view: &str, label: u8| {
            val.records
                .iter()
                .filter(|r| r.view.as_deref() == Some(view) && r.label == label)
                .count()
        };
        assert_eq!(count("PA", 1), 10);
        assert_eq!(count("PA", 0), 10);
        assert_eq!(count("AP", 1), 4);
        assert_eq!(count("AP", 0), 4);
        assert_eq!(val.split, SplitTag::Validation);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let d = ds(200);
        let layout = ValidationLayout::balanced(20).unwrap();
        let a = split_validation(&d, 9, &layout).unwrap();
        let b = split_validation(&d, 9, &layout).unwrap();
        let c = split_validation(&d, 10, &layout).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn insufficient_stratum() {
        let d = ds(30);
        let layout = ValidationLayout::ByView {
            quotas: vec![ViewQuota { view: "AP".into(), per_label: 5 }],
        };
        assert!(matches!(
            split_validation(&d, 0, &layout),
            Err(Error::InsufficientStratum { .. })
        ));
    }

    #[test]
    fn default_layout_sizes() {
        assert_eq!(ValidationLayout::default_for(&ds(10)).total(), 102);
        assert!(ValidationLayout::balanced(7).is_err());
    }
}
