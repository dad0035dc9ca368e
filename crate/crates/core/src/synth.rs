//! Synthetic cohorts with the same layout as the real data: 28 features,
//! class-dependent missingness with jointly missing lab panels, a CXR view
//! column and a binary label. Used by tests, benchmarks and `gen-data`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{default_schema, Dataset, FeatureRecord, SplitTag};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, tag};

/// Missing counts per feature as (negatives missing, positives missing) for
/// two reference sites, with the class sizes they were counted on.
const SITE_A_MISSING: [(u32, u32); 28] = [
    (0, 0), (0, 0), (0, 0), (226, 359), (0, 0), (0, 0), (0, 0), (5, 4), (5, 4), (5, 4),
    (5, 4), (5, 4), (207, 370), (0, 0), (0, 0), (0, 0), (0, 0), (3, 7), (0, 0), (9, 8),
    (0, 0), (0, 0), (74, 158), (0, 0), (36, 212), (0, 0), (0, 0), (0, 0),
];
const SITE_A_CLASSES: (u32, u32) = (258, 382);
const SITE_B_MISSING: [(u32, u32); 28] = [
    (4, 8), (4, 9), (32, 52), (3, 2), (3, 1), (12, 20), (0, 0), (9, 5), (9, 5), (9, 5),
    (9, 5), (9, 5), (106, 78), (102, 72), (2, 0), (1, 2), (1, 2), (7, 7), (1, 0), (31, 52),
    (1, 2), (1, 2), (6, 13), (1, 0), (79, 25), (1, 2), (1, 1), (0, 0),
];
const SITE_B_CLASSES: (u32, u32) = (197, 291);

/// Features that go missing together (the differential count, the blood
/// count panel).
const PANELS: [&[usize]; 2] = [&[7, 8, 9, 10, 11], &[15, 16, 20, 21, 25]];

/// Standardized class separation per feature; positive means higher in
/// positives. White cell counts drop in positives while inflammation markers
/// and the CXR score rise.
const EFFECTS: [f64; 28] = [
    0.1, 0.25, 0.45, 0.1, 0.05, 0.3, 0.55, -0.3, -0.6, -0.55, -0.2, -0.25, 0.2, 0.5, 0.2, 0.05, 0.05, -0.1, 0.1, 0.6,
    -0.6, 0.0, -0.05, -0.15, 0.1, -0.4, 0.05, 1.1,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub records: usize,
    pub positive_rate: f64,
    /// Per feature missing probability for (negatives, positives).
    pub missing: Vec<(f64, f64)>,
    /// Multiplies every class effect.
    pub signal: f64,
    /// Fraction of PA views; the rest are AP.
    pub pa_fraction: f64,
    pub id_prefix: String,
    pub seed: u64,
}

fn rates(counts: &[(u32, u32); 28], classes: (u32, u32)) -> Vec<(f64, f64)> {
    counts
        .iter()
        .map(|&(n, p)| (n as f64 / classes.0 as f64, p as f64 / classes.1 as f64))
        .collect()
}

impl SynthConfig {
    /// Training-site layout: 640 records, mostly complete except a few
    /// rarely ordered tests.
    pub fn site_a(seed: u64) -> Self {
        SynthConfig {
            records: 640,
            positive_rate: 382.0 / 640.0,
            missing: rates(&SITE_A_MISSING, SITE_A_CLASSES),
            signal: 1.0,
            pa_fraction: 0.84,
            id_prefix: "A".into(),
            seed,
        }
    }

    /// Test-site layout: 488 records with a different missingness profile.
    pub fn site_b(seed: u64) -> Self {
        SynthConfig {
            records: 488,
            positive_rate: 291.0 / 488.0,
            missing: rates(&SITE_B_MISSING, SITE_B_CLASSES),
            signal: 1.0,
            pa_fraction: 0.84,
            id_prefix: "B".into(),
            seed,
        }
    }

    pub fn with_records(mut self, n: usize) -> Self {
        self.records = n;
        self
    }
}

/// Draws a cohort. Values live on per-feature raw scales, so normalization
/// matters; three shared latent factors correlate the features.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let dim = cfg.missing.len();
    if dim != 28 {
        return Err(Error::InvalidConfig(format!("synthetic cohorts have 28 features, got {dim} missing rates")));
    }
    if !(0.0..=1.0).contains(&cfg.positive_rate) {
        return Err(Error::InvalidConfig("positive_rate must lie in [0, 1]".into()));
    }
    let mut loading_rng = rng_from_seed(derive_seed(0x5EED, &[tag("loadings")]));
    let loadings: Vec<[f64; 3]> = (0..dim)
        .map(|_| {
            let mut l = [0.0; 3];
            for v in &mut l {
                *v = loading_rng.random_range(-0.5..0.5);
            }
            l
        })
        .collect();
    let location = |j: usize| 5.0 + 10.0 * j as f64;
    let scale = |j: usize| 1.0 + (j % 5) as f64;

    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[tag("synth")]));
    let mut records = Vec::with_capacity(cfg.records);
    for i in 0..cfg.records {
        let label = u8::from(rng.random::<f64>() < cfg.positive_rate);
        let sign = if label == 1 { 0.5 } else { -0.5 };
        let factors: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let mut values = vec![0.0; dim];
        let mut known = vec![true; dim];
        for j in 0..dim {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let shared: f64 = loadings[j].iter().zip(&factors).map(|(l, f)| l * f).sum();
            let z = sign * cfg.signal * EFFECTS[j] + shared + 0.8 * noise;
            values[j] = location(j) + scale(j) * z;
        }
        let miss_rate = |j: usize| if label == 1 { cfg.missing[j].1 } else { cfg.missing[j].0 };
        for j in 0..dim {
            if PANELS.iter().any(|p| p[1..].contains(&j)) {
                continue;
            }
            let gone = rng.random::<f64>() < miss_rate(j);
            match PANELS.iter().find(|p| p[0] == j) {
                Some(panel) => panel.iter().for_each(|&k| known[k] = !gone),
                None => known[j] = !gone,
            }
        }
        for j in 0..dim {
            if !known[j] {
                values[j] = 0.0;
            }
        }
        let view = if rng.random::<f64>() < cfg.pa_fraction { "PA" } else { "AP" };
        records.push(FeatureRecord {
            subject_id: format!("{}{:05}", cfg.id_prefix, i),
            values,
            known,
            label,
            view: Some(view.to_string()),
        });
    }
    Dataset::new(default_schema(), records, SplitTag::Train, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_with_panel_missingness() {
        let cfg = SynthConfig::site_b(3);
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_eq!(a.len(), 488);
        for r in &a.records {
            for p in PANELS {
                assert!(p.iter().all(|&k| r.known[k] == r.known[p[0]]));
            }
            assert!(r.known[27] && r.known[6]);
        }
        let pos = a.positives() as f64 / a.len() as f64;
        assert!((pos - 0.596).abs() < 0.08, "positive rate {pos}");
    }
}
