use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::delong::delong_test;
use super::roc::roc_auc;
use super::scores::ScoreTable;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Raw p-value threshold for "statistically worse"; no multiplicity correction.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerNEntry {
    pub n: usize,
    pub samples: usize,
    pub positives: usize,
    /// `None` when the group holds a single class.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerNCurve {
    pub model: String,
    pub entries: Vec<PerNEntry>,
    /// Mean over the lengths that have an AUC.
    pub mean_auc: f64,
    /// Lengths left out of the mean because they hold a single class.
    pub excluded: Vec<usize>,
}

impl PerNCurve {
    pub fn auc_at(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n).and_then(|e| e.auc)
    }
}

fn group_by_length(lengths: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &n) in lengths.iter().enumerate() {
        g.entry(n).or_default().push(i);
    }
    g
}

fn gather<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

/// AUC per combination length and their mean.
pub fn evaluate_per_n(model: &str, scores: &[f64], labels: &[u8], lengths: &[usize]) -> Result<PerNCurve> {
    if scores.len() != labels.len() || lengths.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len().min(lengths.len()),
        });
    }
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for (n, idx) in group_by_length(lengths) {
        let l = gather(labels, &idx);
        let positives = l.iter().filter(|&&x| x == 1).count();
        let auc = if positives == 0 || positives == l.len() {
            log::warn!("{model}: length {n} has a single class ({} samples), excluded from the mean", l.len());
            excluded.push(n);
            None
        } else {
            Some(roc_auc(&gather(scores, &idx), &l)?.auc)
        };
        entries.push(PerNEntry {
            n,
            samples: idx.len(),
            positives,
            auc,
        });
    }
    let aucs: Vec<f64> = entries.iter().filter_map(|e| e.auc).collect();
    if aucs.is_empty() {
        return Err(Error::EmptyResult(format!("{model}: no length has both classes")));
    }
    Ok(PerNCurve {
        model: model.to_string(),
        mean_auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
        entries,
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub n: usize,
    pub model_a: String,
    pub model_b: String,
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<String>,
    pub lengths: Vec<usize>,
    pub curves: Vec<PerNCurve>,
    pub pairwise: Vec<PairwiseTest>,
    /// `worse_counts[model][k]`: rivals significantly worse than `model` at `lengths[k]`.
    pub worse_counts: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m == name)
    }
}

/// Per-length AUC curves for every model plus pairwise DeLong tests. Model
/// B counts as worse than A at length n when A's AUC is higher and p < 0.05.
pub fn significance_matrix(table: &ScoreTable, exec: Execution) -> Result<EvalReport> {
    let k = table.models.len();
    if k < 2 {
        return Err(Error::InvalidConfig(format!("significance matrix needs at least 2 models, got {k}")));
    }
    let curves = exec.try_map(&table.models, |m| {
        let i = table.models.iter().position(|x| x == m).unwrap_or(0);
        evaluate_per_n(m, &table.scores[i], &table.labels, &table.lengths)
    })?;
    let groups: Vec<(usize, Vec<usize>)> = group_by_length(&table.lengths).into_iter().collect();
    let lengths: Vec<usize> = groups.iter().map(|(n, _)| *n).collect();

    let per_group: Vec<Result<Vec<PairwiseTest>>> = exec.map(&groups, |(n, idx)| {
        let labels = gather(&table.labels, idx);
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos < 2 || labels.len() - pos < 2 {
            return Ok(Vec::new());
        }
        let scores: Vec<Vec<f64>> = table.scores.iter().map(|s| gather(s, idx)).collect();
        let mut tests = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let c = delong_test(&scores[a], &scores[b], &labels)
                    .map_err(|e| e.context(format!("length {n}, {} vs {}", table.models[a], table.models[b])))?;
                tests.push(PairwiseTest {
                    n: *n,
                    model_a: table.models[a].clone(),
                    model_b: table.models[b].clone(),
                    auc_a: c.auc_a,
                    auc_b: c.auc_b,
                    z: c.z,
                    p: c.p,
                });
            }
        }
        Ok(tests)
    });
    let mut pairwise = Vec::new();
    for g in per_group {
        pairwise.extend(g?);
    }

    let mut worse_counts = vec![vec![0usize; lengths.len()]; k];
    for t in &pairwise {
        if t.p >= SIGNIFICANCE_LEVEL || t.auc_a == t.auc_b {
            continue;
        }
        let col = lengths.binary_search(&t.n).expect("length of a tested group");
        let winner = if t.auc_a > t.auc_b { &t.model_a } else { &t.model_b };
        let w = table.models.iter().position(|m| m == winner).expect("known model");
        worse_counts[w][col] += 1;
    }
    Ok(EvalReport {
        models: table.models.clone(),
        lengths,
        curves,
        pairwise,
        worse_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub model: String,
    pub samples: usize,
    pub positives: usize,
    pub auc: f64,
    /// DeLong p-value against the best model of the section (1 for the best itself).
    pub p_vs_best: f64,
    /// AUC below the section's best with p < 0.05.
    pub significantly_lower: bool,
}

/// AUC of each model on one set of samples, starred against the section best.
pub fn evaluate_subset(models: &[(String, Vec<f64>)], labels: &[u8]) -> Result<Vec<SubsetRow>> {
    if models.is_empty() {
        return Err(Error::InvalidConfig("no models to evaluate".into()));
    }
    let aucs = models
        .iter()
        .map(|(_, s)| roc_auc(s, labels).map(|r| r.auc))
        .collect::<Result<Vec<_>>>()?;
    let best = (0..aucs.len()).fold(0, |b, i| if aucs[i] > aucs[b] { i } else { b });
    let positives = labels.iter().filter(|&&l| l == 1).count();
    models
        .iter()
        .enumerate()
        .map(|(i, (name, s))| {
            let p = if i == best {
                1.0
            } else {
                delong_test(&models[best].1, s, labels)
                    .map_err(|e| e.context(format!("{} vs {name}", models[best].0)))?
                    .p
            };
            Ok(SubsetRow {
                model: name.clone(),
                samples: labels.len(),
                positives,
                auc: aucs[i],
                p_vs_best: p,
                significantly_lower: aucs[i] < aucs[best] && p < SIGNIFICANCE_LEVEL,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(models: Vec<(&str, Vec<f64>)>, labels: Vec<u8>, lengths: Vec<usize>) -> ScoreTable {
        let n = labels.len();
        ScoreTable {
            sample_ids: (0..n).map(|i| i.to_string()).collect(),
            combination_ids: vec![0; n],
            lengths,
            labels,
            models: models.iter().map(|(m, _)| m.to_string()).collect(),
            scores: models.into_iter().map(|(_, s)| s).collect(),
        }
    }

    #[test]
    fn constant_model_is_chance_everywhere() {
        let labels = vec![0, 1, 0, 1, 1, 0];
        let c = evaluate_per_n("c", &[0.3; 6], &labels, &[1, 1, 2, 2, 3, 3]).unwrap();
        assert!(c.entries.iter().all(|e| e.auc == Some(0.5)));
        assert_eq!(c.mean_auc, 0.5);
    }

    #[test]
    fn single_length_mean_and_single_class_exclusion() {
        let labels = vec![0, 1, 0, 1, 1, 1];
        let scores = [0.1, 0.9, 0.2, 0.4, 0.5, 0.6];
        let c = evaluate_per_n("m", &scores, &labels, &[4, 4, 4, 4, 7, 7]).unwrap();
        assert_eq!(c.auc_at(4), Some(1.0));
        assert_eq!(c.auc_at(7), None);
        assert_eq!(c.excluded, vec![7]);
        assert_eq!(c.mean_auc, 1.0);
    }

    #[test]
    fn clones_never_win() {
        let labels = vec![0, 1, 0, 1, 0, 1, 1, 0];
        let s = vec![0.2, 0.7, 0.4, 0.6, 0.1, 0.9, 0.3, 0.5];
        let t = table(vec![("a", s.clone()), ("b", s)], labels, vec![2; 8]);
        let r = significance_matrix(&t, Execution::Sequential).unwrap();
        assert!(r.worse_counts.iter().flatten().all(|&c| c == 0));
        assert_eq!(r.pairwise.len(), 1);
        assert_eq!(r.pairwise[0].p, 1.0);
    }

    #[test]
    fn subset_table_stars() {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let good: Vec<f64> = (0..200).map(|i| (i % 2) as f64 + (i as f64 * 0.37).sin() * 0.3).collect();
        let poor: Vec<f64> = (0..200).map(|i| (i as f64 * 1.3).cos()).collect();
        let rows = evaluate_subset(&[("good".into(), good), ("poor".into(), poor)], &labels).unwrap();
        assert_eq!(rows[0].p_vs_best, 1.0);
        assert!(!rows[0].significantly_lower);
        assert!(rows[1].significantly_lower);
        assert_eq!(rows[1].samples, 200);
    }
}
