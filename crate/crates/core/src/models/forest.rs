use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{normalize_pair, ModelKind, ModelParams, ModelSpec, TrainedModel, TrainingLog};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::exec::Execution;
use crate::masking::apply_random_mask;
use crate::rng::{derive_seed, rng_from_seed, tag, Rng};

/// Marker in [`DecisionTree::feature`] for leaf nodes.
pub const LEAF: u32 = u32::MAX;

/// How many features a split considers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureRule {
    Sqrt,
    All,
    Fixed(usize),
}

impl FeatureRule {
    pub fn count(self, dim: usize) -> usize {
        let k = match self {
            FeatureRule::Sqrt => (dim as f64).sqrt() as usize,
            FeatureRule::All => dim,
            FeatureRule::Fixed(k) => k,
        };
        k.clamp(1, dim.max(1))
    }
}

/// When training rows are masked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForestMasking {
    /// Every bootstrap draw gets its own mask.
    #[default]
    PerBootstrapDraw,
    /// Each original row is masked once and reused by every tree.
    PerSample,
}

/// CART tree stored column-wise. Node 0 is the root; a node with feature
/// [`LEAF`] predicts `value`, otherwise inputs with `x[feature] <= threshold`
/// go to `left`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature: Vec<u32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// Positive fraction of the training rows reaching the node.
    pub value: Vec<f64>,
}

impl DecisionTree {
    pub fn len(&self) -> usize {
        self.feature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature.is_empty()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.feature[node] == LEAF
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut n = 0;
        while self.feature[n] != LEAF {
            n = if x[self.feature[n] as usize] <= self.threshold[n] {
                self.left[n] as usize
            } else {
                self.right[n] as usize
            };
        }
        self.value[n]
    }

    pub fn depth(&self) -> usize {
        let mut stack = vec![(0usize, 0usize)];
        let mut deepest = 0;
        while let Some((n, d)) = stack.pop() {
            deepest = deepest.max(d);
            if !self.is_leaf(n) {
                stack.push((self.left[n] as usize, d + 1));
                stack.push((self.right[n] as usize, d + 1));
            }
        }
        deepest
    }

    fn push(&mut self, value: f64) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.feature.len() - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean of the trees' positive probabilities.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

/// Grows one tree on the row-major matrix `x` (`y.len()` rows of `dim`).
pub(crate) fn grow_tree(x: &[f64], y: &[u8], dim: usize, p: &TreeParams, rng: &mut Rng) -> DecisionTree {
    let mut tree = DecisionTree::default();
    let positive_fraction = |rows: &[usize]| rows.iter().filter(|&&r| y[r] == 1).count() as f64 / rows.len() as f64;
    let rows: Vec<usize> = (0..y.len()).collect();
    let root = tree.push(positive_fraction(&rows));
    let mut stack = vec![(root, rows, 0usize)];
    let mut features: Vec<usize> = (0..dim).collect();
    let mut column: Vec<(f64, u8)> = Vec::new();

    while let Some((node, rows, depth)) = stack.pop() {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| y[r] == 1).count();
        let stop = pos == 0 || pos == n || n < 2 * p.min_leaf || p.max_depth.is_some_and(|d| depth >= d);
        if stop {
            continue;
        }
        let parent = gini_mass(pos as f64, n as f64);
        let mut best: Option<(f64, usize, f64)> = None;
        features.shuffle(rng);
        let mut informative = 0;
        for &f in &features {
            if informative == p.features_per_split {
                break;
            }
            column.clear();
            column.extend(rows.iter().map(|&r| (x[r * dim + f], y[r])));
            column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[n - 1].0 {
                continue;
            }
            informative += 1;
            let mut left_pos = 0usize;
            for i in 0..n - 1 {
                left_pos += column[i].1 as usize;
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let nl = i + 1;
                if nl < p.min_leaf || n - nl < p.min_leaf {
                    continue;
                }
                let impurity = gini_mass(left_pos as f64, nl as f64) + gini_mass((pos - left_pos) as f64, (n - nl) as f64);
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let (lo, hi) = (column[i].0, column[i + 1].0);
                    let mut t = lo + (hi - lo) / 2.0;
                    if t >= hi {
                        t = lo;
                    }
                    best = Some((impurity, f, t));
                }
            }
        }
        let Some((impurity, f, t)) = best else { continue };
        if impurity >= parent {
            continue;
        }
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x[r * dim + f] <= t);
        let l = tree.push(positive_fraction(&l_rows));
        let r = tree.push(positive_fraction(&r_rows));
        tree.feature[node] = f as u32;
        tree.threshold[node] = t;
        tree.left[node] = l as u32;
        tree.right[node] = r as u32;
        stack.push((r, r_rows, depth + 1));
        stack.push((l, l_rows, depth + 1));
    }
    tree
}

/// `n * gini` for a node with `pos` positives out of `n`.
fn gini_mass(pos: f64, n: f64) -> f64 {
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

/// Random forest on masked bootstrap resamples, trees grown in parallel.
pub fn train_rf(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    train_rf_with(spec, train, val, Execution::default())
}

pub fn train_rf_with(spec: &ModelSpec, train: &Dataset, val: &Dataset, exec: Execution) -> Result<TrainedModel> {
    if spec.kind != ModelKind::Rf {
        return Err(Error::InvalidConfig(format!("spec of kind {} passed to the RF trainer", spec.kind)));
    }
    spec.validate()?;
    let (normalizer, train, val) = normalize_pair(train, val)?;
    let cfg = &spec.forest;
    let dim = train.dim();
    let n = train.len();
    let tp = TreeParams {
        max_depth: cfg.max_depth,
        min_leaf: cfg.min_leaf,
        features_per_split: cfg.features_per_split.count(dim),
    };

    let premasked: Option<Vec<Vec<f64>>> = match cfg.masking {
        ForestMasking::PerSample => {
            let mut rng = rng_from_seed(derive_seed(spec.seed, &[tag("rf-mask")]));
            Some(train.records.iter().map(|r| apply_random_mask(r, spec.imp, &mut rng).values).collect())
        }
        ForestMasking::PerBootstrapDraw => None,
    };

    let trees = exec.map_range(cfg.trees, |t| {
        let mut rng = rng_from_seed(derive_seed(spec.seed, &[tag("tree"), t as u64]));
        let mut x = Vec::with_capacity(n * dim);
        let mut y = Vec::with_capacity(n);
        for j in 0..n {
            let row = if cfg.bootstrap { rng.random_range(0..n) } else { j };
            let r = &train.records[row];
            match &premasked {
                Some(m) => x.extend_from_slice(&m[row]),
                None => x.extend(r.values.iter().map(|&v| if rng.random::<f64>() < spec.imp { 0.0 } else { v })),
            }
            y.push(r.label);
        }
        grow_tree(&x, &y, dim, &tp, &mut rng)
    });
    let forest = Forest { trees };

    let mut rng = rng_from_seed(derive_seed(spec.seed, &[tag("val-mask")]));
    let replicas = if spec.imp == 0.0 { 1 } else { spec.training.val_mask_replicas.max(1) };
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..replicas {
        for r in &val.records {
            scores.push(forest.predict(&apply_random_mask(r, spec.imp, &mut rng).values));
            labels.push(r.label);
        }
    }
    let val_auc = roc_auc(&scores, &labels).map_err(|e| e.context("validation set"))?.auc;

    Ok(TrainedModel {
        spec: spec.clone(),
        normalizer,
        params: ModelParams::Forest(forest),
        log: TrainingLog {
            epochs: Vec::new(),
            selected_epoch: None,
            val_auc: Some(val_auc),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: Option<usize>) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_leaf: 1,
            features_per_split: 2,
        }
    }

    #[test]
    fn stump_splits_inside_the_gap() {
        // feature 0 separates at (1, 2); feature 1 is noise
        let x = [0.0, 0.3, 0.5, 0.9, 1.0, 0.1, 2.0, 0.7, 2.5, 0.2, 3.0, 0.6];
        let y = [0, 0, 0, 1, 1, 1];
        let t = grow_tree(&x, &y, 2, &params(Some(1)), &mut rng_from_seed(1));
        assert_eq!(t.feature[0], 0);
        assert!(t.threshold[0] >= 1.0 && t.threshold[0] < 2.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[0.2, 0.0]), 0.0);
        assert_eq!(t.predict(&[2.2, 0.0]), 1.0);
    }

    #[test]
    fn pure_data_gives_a_constant_leaf() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let t = grow_tree(&x, &[1, 1, 1, 1], 1, &params(None), &mut rng_from_seed(0));
        assert_eq!(t.len(), 1);
        assert_eq!(t.predict(&[10.0]), 1.0);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<u8> = (0..20).map(|i| (i % 3 == 0) as u8).collect();
        let p = TreeParams {
            max_depth: None,
            min_leaf: 3,
            features_per_split: 1,
        };
        let t = grow_tree(&x, &y, 1, &p, &mut rng_from_seed(0));
        // count rows per leaf
        let mut counts = vec![0; t.len()];
        for v in &x {
            let mut n = 0;
            while !t.is_leaf(n) {
                n = if *v <= t.threshold[n] { t.left[n] as usize } else { t.right[n] as usize };
            }
            counts[n] += 1;
        }
        for (n, &c) in counts.iter().enumerate().take(t.len()) {
            if t.is_leaf(n) {
                assert!(c >= 3, "leaf {n} has {c} rows");
            }
        }
    }

    #[test]
    fn feature_rule_counts() {
        assert_eq!(FeatureRule::Sqrt.count(28), 5);
        assert_eq!(FeatureRule::All.count(28), 28);
        assert_eq!(FeatureRule::Fixed(0).count(28), 1);
        assert_eq!(FeatureRule::Fixed(40).count(28), 28);
    }
}
