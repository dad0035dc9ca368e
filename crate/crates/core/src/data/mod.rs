//! Tabular records, missingness encoding, normalization, validation splits
//! and clinical input subsets.

mod load;
mod normalize;
mod split;
mod subset;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use load::{load_dataset, write_dataset, LoadOptions};
pub use normalize::{apply_normalizer, fit_normalizer, Normalizer};
pub use split::{split_validation, SplitMembership, ValidationLayout, ViewQuota};
pub use subset::{restrict_to_subset, InputSubset};

/// The 27 laboratory parameters and the chest x-ray score, in canonical order.
pub const FEATURE_NAMES: [&str; 28] = [
    "Alkaline Phosphatase",
    "Alanine Aminotransferase",
    "Aspartate Aminotransferase",
    "Bilirubin Direct",
    "Bilirubin Total",
    "Creatine Kinase",
    "C-Reactive Protein",
    "Absolute Basophil Count",
    "Absolute Eosinophil Count",
    "Absolute Lymphocyte Count",
    "Absolute Monocyte Count",
    "Absolute Neutrophil Count",
    "D-Dimer",
    "Ferritin",
    "Gamma-Glutamyl Transferase",
    "Hemoglobin",
    "Hematocrit",
    "Potassium",
    "Creatinine",
    "Lactate Dehydrogenase",
    "Absolute Leukocyte Count",
    "Mean Corpuscular Volume",
    "Magnesium",
    "Sodium",
    "Procalcitonin",
    "Thrombocyte Count",
    "Urea",
    "Chest X-Ray",
];

pub const SUBSET_A: [&str; 6] = [
    "C-Reactive Protein",
    "Absolute Lymphocyte Count",
    "Absolute Neutrophil Count",
    "Ferritin",
    "Lactate Dehydrogenase",
    "Chest X-Ray",
];

pub const SUBSET_B: [&str; 7] = [
    "C-Reactive Protein",
    "Absolute Basophil Count",
    "Absolute Eosinophil Count",
    "Absolute Lymphocyte Count",
    "Absolute Monocyte Count",
    "Absolute Neutrophil Count",
    "Chest X-Ray",
];

pub fn default_schema() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// One subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub subject_id: String,
    pub values: Vec<f64>,
    /// `true` where the value was observed.
    pub known: Vec<bool>,
    pub label: u8,
    /// Chest x-ray view (e.g. `PA`, `AP`) when the source provides it.
    pub view: Option<String>,
}

impl FeatureRecord {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_positive(&self) -> bool {
        self.label == 1
    }

    pub fn observed_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub records: Vec<FeatureRecord>,
    pub split: SplitTag,
    /// Whether `values` are in normalized feature space.
    pub normalized: bool,
}

impl Dataset {
    /// Builds a dataset after checking its structural invariants.
    pub fn new(
        feature_names: Vec<String>,
        records: Vec<FeatureRecord>,
        split: SplitTag,
        normalized: bool,
    ) -> Result<Self> {
        let ds = Dataset {
            feature_names,
            records,
            split,
            normalized,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for name in &self.feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate feature name `{name}`")));
            }
        }
        let d = self.dim();
        for (i, r) in self.records.iter().enumerate() {
            if r.values.len() != d || r.known.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "record {i} has {} values / {} flags, expected {d}",
                    r.values.len(),
                    r.known.len()
                )));
            }
            if r.label > 1 {
                return Err(Error::InvalidDataset(format!("record {i} has label {}", r.label)));
            }
            if self.normalized && r.values.iter().zip(&r.known).any(|(&v, &k)| !k && v != 0.0) {
                return Err(Error::InvalidDataset(format!(
                    "record {i} has a non-zero value at a missing position"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.is_positive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Number of records missing each feature, split by label: `(negatives, positives)`.
    pub fn missing_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0, 0); self.dim()];
        for r in &self.records {
            for (i, &k) in r.known.iter().enumerate() {
                if !k {
                    if r.is_positive() {
                        counts[i].1 += 1;
                    } else {
                        counts[i].0 += 1;
                    }
                }
            }
        }
        counts
    }

    /// A dataset with the same schema and a subset of the records, in the given order.
    pub fn select(&self, indices: &[usize], split: SplitTag) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            split,
            normalized: self.normalized,
        }
    }
}
