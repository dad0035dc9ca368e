use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// The features left visible; every other feature is masked.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputCombination {
    pub kept: Vec<usize>,
}

impl InputCombination {
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PlanMode {
    /// All singletons plus the full set; 15 random combinations of every other length.
    Validation,
    /// Up to 1000 random combinations of every length.
    Test,
    /// Up to `per_length` combinations of every length.
    Custom { per_length: usize },
}

impl PlanMode {
    /// Number of combinations of length `k` out of `n` features.
    pub fn quota(self, n: usize, k: usize) -> usize {
        let available = binomial(n, k);
        let cap = match self {
            PlanMode::Validation if k == 1 || k == n => return available.min(usize::MAX as u128) as usize,
            PlanMode::Validation => 15,
            PlanMode::Test => 1000,
            PlanMode::Custom { per_length } => per_length,
        };
        (cap as u128).min(available) as usize
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinationPlan {
    pub n_features: usize,
    pub mode: PlanMode,
    pub seed: u64,
    pub combinations: Vec<InputCombination>,
    pub per_length_counts: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    n_features: usize,
    #[serde(flatten)]
    mode: PlanMode,
    seed: u64,
    combinations: Vec<InputCombination>,
}

impl CombinationPlan {
    pub fn from_combinations(n_features: usize, mode: PlanMode, seed: u64, combinations: Vec<InputCombination>) -> Result<Self> {
        let mut per_length_counts = BTreeMap::new();
        for c in &combinations {
            *per_length_counts.entry(c.len()).or_insert(0) += 1;
        }
        let plan = CombinationPlan {
            n_features,
            mode,
            seed,
            combinations,
            per_length_counts,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn len(&self) -> usize {
        self.combinations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combinations.is_empty()
    }

    /// Indices must be strictly increasing and in range; combinations must not repeat.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (id, c) in self.combinations.iter().enumerate() {
            let bad = c.kept.is_empty()
                || c.kept.len() > self.n_features
                || c.kept.windows(2).any(|w| w[0] >= w[1])
                || c.kept.iter().any(|&i| i >= self.n_features);
            if bad {
                return Err(Error::InvalidConfig(format!("combination {id} is invalid: {:?}", c.kept)));
            }
            if !seen.insert(&c.kept) {
                return Err(Error::InvalidConfig(format!("combination {id} is a duplicate: {:?}", c.kept)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PlanFile {
            n_features: self.n_features,
            mode: self.mode,
            seed: self.seed,
            combinations: self.combinations.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text)?;
        Self::from_combinations(file.n_features, file.mode, file.seed, file.combinations)
    }
}

/// Draws the combination plan. Lengths whose binomial coefficient does not
/// exceed the quota are enumerated exhaustively in lexicographic order; the
/// rest are sampled without replacement from a per-length random stream.
pub fn generate_combination_plan(n_features: usize, mode: PlanMode, seed: u64) -> Result<CombinationPlan> {
    if n_features == 0 {
        return Err(Error::InvalidConfig("combination plan needs at least one feature".into()));
    }
    let mut combinations = Vec::new();
    for k in 1..=n_features {
        let quota = mode.quota(n_features, k);
        if binomial(n_features, k) <= quota as u128 {
            combinations.extend(all_combinations(n_features, k));
        } else {
            let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
            let mut seen = HashSet::with_capacity(quota);
            while seen.len() < quota {
                let mut kept = sample_indices(&mut rng, n_features, k).into_vec();
                kept.sort_unstable();
                if seen.insert(kept.clone()) {
                    combinations.push(InputCombination { kept });
                }
            }
        }
    }
    CombinationPlan::from_combinations(n_features, mode, seed, combinations)
}

fn all_combinations(n: usize, k: usize) -> Vec<InputCombination> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(InputCombination { kept: idx.clone() });
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
