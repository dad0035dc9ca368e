#![allow(dead_code)]

use dfcn_core::data::{Dataset, FeatureRecord, SplitTag};
use dfcn_core::rng::rng_from_seed;
use rand::Rng;

pub fn dataset(rows: Vec<(Vec<f64>, u8)>, split: SplitTag) -> Dataset {
    let dim = rows[0].0.len();
    let records = rows
        .into_iter()
        .enumerate()
        .map(|(i, (values, label))| FeatureRecord {
            subject_id: format!("r{i}"),
            known: vec![true; values.len()],
            values,
            label,
            view: None,
        })
        .collect();
    Dataset::new((0..dim).map(|j| format!("f{j}")).collect(), records, split, false).unwrap()
}

/// `dim` uniform features; the label is the sign of `x0 + x1` with a margin
/// of 0.2 around the boundary, the other features are noise.
pub fn separable(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = x[0] + x[1];
        if s.abs() < 0.2 {
            continue;
        }
        rows.push((x, u8::from(s > 0.0)));
    }
    dataset(rows, SplitTag::Train)
}

/// Six features spanned by two latent factors; the label follows the first.
pub fn low_rank(n: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let w = [[1.0, 0.5], [-0.5, 1.0], [0.8, -0.2], [0.3, 0.9], [-1.0, 0.1], [0.2, -0.7]];
    let rows = (0..n)
        .map(|_| {
            let z = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let x = w.iter().map(|r| r[0] * z[0] + r[1] * z[1]).collect();
            (x, u8::from(z[0] > 0.0))
        })
        .collect();
    dataset(rows, SplitTag::Train)
}

pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut twice = 0u64;
    let (mut m, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            m += 1;
        } else {
            n += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice as f64 / (2 * m * n) as f64
}
