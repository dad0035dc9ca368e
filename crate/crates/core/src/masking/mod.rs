//! Training-time random input masking and the input-combination plans used
//! to build heavily masked evaluation sets.

mod eval_set;
mod plan;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureRecord;

pub use eval_set::{build_masked_eval_set, DropRule, EvalEntry, MaskedEvalSet};
pub use plan::{binomial, generate_combination_plan, CombinationPlan, InputCombination, PlanMode};

/// Identifies the combination a sample was generated from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComboTag {
    pub id: u32,
    pub len: usize,
}

/// A record as the network sees it after masking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskedSample {
    /// Network input; zero wherever the feature is masked or unknown.
    pub values: Vec<f64>,
    /// Pre-mask normalized values, the reconstruction targets.
    pub targets: Vec<f64>,
    /// Positions masked by the random draw, independent of `known`.
    pub train_mask: Vec<bool>,
    pub known: Vec<bool>,
    pub label: u8,
    pub combo: Option<ComboTag>,
}

impl MaskedSample {
    /// The record with nothing masked.
    pub fn unmasked(record: &FeatureRecord) -> Self {
        MaskedSample {
            values: record.values.clone(),
            targets: record.values.clone(),
            train_mask: vec![false; record.dim()],
            known: record.known.clone(),
            label: record.label,
            combo: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Positions that are both observed and masked.
    pub fn reconstruction_eligible(&self) -> impl Iterator<Item = usize> + '_ {
        self.known
            .iter()
            .zip(&self.train_mask)
            .enumerate()
            .filter(|(_, (&k, &m))| k && m)
            .map(|(i, _)| i)
    }
}

/// Masks each feature independently with probability `imp`.
pub fn apply_random_mask<R: Rng + ?Sized>(record: &FeatureRecord, imp: f64, rng: &mut R) -> MaskedSample {
    let mut sample = MaskedSample::unmasked(record);
    remask(&mut sample, record, imp, rng);
    sample
}

/// In-place variant of [`apply_random_mask`] that reuses the sample's buffers.
pub fn remask<R: Rng + ?Sized>(sample: &mut MaskedSample, record: &FeatureRecord, imp: f64, rng: &mut R) {
    debug_assert!((0.0..=1.0).contains(&imp));
    let d = record.dim();
    sample.values.resize(d, 0.0);
    sample.targets.clear();
    sample.targets.extend_from_slice(&record.values);
    sample.train_mask.resize(d, false);
    sample.known.clear();
    sample.known.extend_from_slice(&record.known);
    sample.label = record.label;
    sample.combo = None;
    for i in 0..d {
        let masked = rng.random::<f64>() < imp;
        sample.train_mask[i] = masked;
        sample.values[i] = if masked || !record.known[i] { 0.0 } else { record.values[i] };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn record() -> FeatureRecord {
        FeatureRecord {
            subject_id: "r".into(),
            values: (0..28).map(|i| if i % 4 == 0 { 0.0 } else { i as f64 * 0.1 + 0.05 }).collect(),
            known: (0..28).map(|i| i % 4 != 0).collect(),
            label: 1,
            view: None,
        }
    }

    #[test]
    fn imp_zero_is_identity() {
        let r = record();
        let s = apply_random_mask(&r, 0.0, &mut rng_from_seed(1));
        assert_eq!(s.values, r.values);
        assert!(s.train_mask.iter().all(|&m| !m));
        assert_eq!(s.reconstruction_eligible().count(), 0);
    }

    #[test]
    fn imp_one_masks_everything() {
        let r = record();
        let s = apply_random_mask(&r, 1.0, &mut rng_from_seed(1));
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(s.train_mask.iter().all(|&m| m));
        assert_eq!(s.targets, r.values);
        assert_eq!(s.reconstruction_eligible().count(), 21);
    }

    #[test]
    fn mask_is_independent_of_known() {
        let r = record();
        let mut rng = rng_from_seed(5);
        let mut masked_unknown = 0;
        for _ in 0..200 {
            let s = apply_random_mask(&r, 0.5, &mut rng);
            masked_unknown += (0..28).filter(|&i| !r.known[i] && s.train_mask[i]).count();
            for i in s.reconstruction_eligible() {
                assert!(r.known[i]);
            }
        }
        assert!(masked_unknown > 0);
    }
}
