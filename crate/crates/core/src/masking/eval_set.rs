use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CombinationPlan, ComboTag, MaskedSample};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Which (record, combination) pairs survive into the evaluation set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropRule {
    /// Keep a pair only when every kept feature is observed in the record, so
    /// the combination length equals the number of available inputs.
    #[default]
    AllKeptObserved,
    /// Keep a pair when at least one kept feature is observed.
    AnyKeptObserved,
}

impl DropRule {
    pub fn keeps(self, kept: &[usize], known: &[bool]) -> bool {
        match self {
            DropRule::AllKeptObserved => kept.iter().all(|&i| known[i]),
            DropRule::AnyKeptObserved => kept.iter().any(|&i| known[i]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalEntry {
    pub record: u32,
    pub combo: u32,
}

/// The cross product of records and combinations, stored as index pairs.
/// Samples are materialized on demand.
#[derive(Clone, Debug)]
pub struct MaskedEvalSet {
    pub dataset: Dataset,
    pub plan: CombinationPlan,
    pub drop_rule: DropRule,
    entries: Vec<EvalEntry>,
    kept_masks: Vec<Vec<bool>>,
}

impl MaskedEvalSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EvalEntry] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn label(&self, i: usize) -> u8 {
        self.dataset.records[self.entries[i].record as usize].label
    }

    /// Combination length of sample `i`.
    pub fn length(&self, i: usize) -> usize {
        self.plan.combinations[self.entries[i].combo as usize].len()
    }

    pub fn labels(&self) -> Vec<u8> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn lengths(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.length(i)).collect()
    }

    pub fn positives(&self) -> usize {
        (0..self.len()).filter(|&i| self.label(i) == 1).count()
    }

    /// Writes the network input of sample `i` into `out`.
    pub fn fill_input(&self, i: usize, out: &mut [f64]) {
        self.fill_input_with(&self.dataset, i, out)
    }

    /// Like [`fill_input`](Self::fill_input) but reading values from `ds`,
    /// a row-aligned copy of the set's dataset (e.g. normalized differently).
    pub fn fill_input_with(&self, ds: &Dataset, i: usize, out: &mut [f64]) {
        let e = self.entries[i];
        let r = &ds.records[e.record as usize];
        let kept = &self.kept_masks[e.combo as usize];
        for (j, o) in out.iter_mut().enumerate() {
            *o = if kept[j] && r.known[j] { r.values[j] } else { 0.0 };
        }
    }

    pub fn sample(&self, i: usize) -> MaskedSample {
        let e = self.entries[i];
        let r = &self.dataset.records[e.record as usize];
        let mut values = vec![0.0; r.dim()];
        self.fill_input(i, &mut values);
        MaskedSample {
            values,
            targets: r.values.clone(),
            train_mask: self.kept_masks[e.combo as usize].iter().map(|k| !k).collect(),
            known: r.known.clone(),
            label: r.label,
            combo: Some(ComboTag {
                id: e.combo,
                len: self.length(i),
            }),
        }
    }

    /// Sample indices grouped by combination length.
    pub fn groups_by_length(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            groups.entry(self.length(i)).or_default().push(i);
        }
        groups
    }
}

/// Applies every combination in `plan` to every record, combination-major.
pub fn build_masked_eval_set(
    ds: &Dataset,
    plan: &CombinationPlan,
    drop_rule: DropRule,
    exec: Execution,
) -> Result<MaskedEvalSet> {
    if plan.n_features != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: plan.n_features,
        });
    }
    let per_combo: Vec<Vec<EvalEntry>> = exec.map_range(plan.len(), |c| {
        let kept = &plan.combinations[c].kept;
        ds.records
            .iter()
            .enumerate()
            .filter(|(_, r)| drop_rule.keeps(kept, &r.known))
            .map(|(r, _)| EvalEntry {
                record: r as u32,
                combo: c as u32,
            })
            .collect()
    });
    let entries: Vec<EvalEntry> = per_combo.into_iter().flatten().collect();
    if entries.is_empty() {
        return Err(Error::EmptyResult("masked evaluation set has no samples".into()));
    }
    let kept_masks = plan
        .combinations
        .iter()
        .map(|c| {
            let mut m = vec![false; ds.dim()];
            for &i in &c.kept {
                m[i] = true;
            }
            m
        })
        .collect();
    Ok(MaskedEvalSet {
        dataset: ds.clone(),
        plan: plan.clone(),
        drop_rule,
        entries,
        kept_masks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureRecord, SplitTag};
    use crate::masking::{generate_combination_plan, InputCombination, PlanMode};

    fn dataset(known: &[Vec<bool>]) -> Dataset {
        let records = known
            .iter()
            .enumerate()
            .map(|(i, k)| FeatureRecord {
                subject_id: i.to_string(),
                values: k.iter().enumerate().map(|(j, &kk)| if kk { 1.0 + j as f64 } else { 0.0 }).collect(),
                known: k.clone(),
                label: (i % 2) as u8,
                view: None,
            })
            .collect();
        let d = known[0].len();
        Dataset::new((0..d).map(|i| format!("f{i}")).collect(), records, SplitTag::Test, true).unwrap()
    }

    #[test]
    fn fully_observed_record_keeps_every_combination() {
        let ds = dataset(&[vec![true; 28]]);
        let plan = generate_combination_plan(28, PlanMode::Validation, 4).unwrap();
        for rule in [DropRule::AllKeptObserved, DropRule::AnyKeptObserved] {
            let set = build_masked_eval_set(&ds, &plan, rule, Execution::Sequential).unwrap();
            assert_eq!(set.len(), 419);
        }
    }

    #[test]
    fn single_observed_feature_survives_once() {
        let mut known = vec![false; 28];
        known[5] = true;
        let ds = dataset(&[known]);
        let singles: Vec<InputCombination> = (0..28).map(|i| InputCombination { kept: vec![i] }).collect();
        let plan = CombinationPlan::from_combinations(28, PlanMode::Test, 0, singles).unwrap();
        for rule in [DropRule::AllKeptObserved, DropRule::AnyKeptObserved] {
            let set = build_masked_eval_set(&ds, &plan, rule, Execution::Sequential).unwrap();
            assert_eq!(set.len(), 1);
            assert_eq!(set.sample(0).values[5], 6.0);
        }
    }

    #[test]
    fn zeroing_and_lengths() {
        let ds = dataset(&[vec![true, false, true], vec![true, true, true]]);
        let plan = generate_combination_plan(3, PlanMode::Test, 0).unwrap();
        let set = build_masked_eval_set(&ds, &plan, DropRule::AnyKeptObserved, Execution::Parallel).unwrap();
        for i in 0..set.len() {
            let s = set.sample(i);
            let combo = &plan.combinations[s.combo.unwrap().id as usize];
            assert_eq!(s.combo.unwrap().len, combo.len());
            for j in 0..3 {
                if !combo.kept.contains(&j) || !s.known[j] {
                    assert_eq!(s.values[j], 0.0);
                }
            }
        }
        let groups = set.groups_by_length();
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), set.len());
    }

    #[test]
    fn empty_output_is_error() {
        let ds = dataset(&[vec![false, false]]);
        let plan = generate_combination_plan(2, PlanMode::Test, 0).unwrap();
        assert!(build_masked_eval_set(&ds, &plan, DropRule::AnyKeptObserved, Execution::Sequential).is_err());
    }
}
