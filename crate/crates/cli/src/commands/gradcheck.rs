use anyhow::{bail, Result};
use dfcn_core::masking::MaskedSample;
use dfcn_core::nn::{grad_check, near_kink, Activation, Architecture, EligibleSet, NetworkParams, Objective};
use dfcn_core::rng::{derive_seed, rng_from_seed, tag, Rng as ChaRng};
use rand::Rng;
use serde::Serialize;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub case: usize,
    pub architecture: String,
    pub objective: String,
    pub checked: usize,
    pub max_relative_error: f64,
    pub worst_tensor: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckSummary {
    pub cases: usize,
    pub gradients: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    /// Cases whose reconstruction-eligible set is empty / covers every input.
    pub empty_eligible: usize,
    pub full_eligible: usize,
    pub failures: Vec<CaseResult>,
}

/// Every tenth case hides nothing (empty reconstruction-eligible set) and
/// the next one masks every observed feature of a complete record (full set).
fn draw(seed: u64, case: usize) -> (NetworkParams, MaskedSample, Objective) {
    let mut rng = rng_from_seed(seed);
    let d = rng.random_range(3..12);
    let width = |rng: &mut ChaRng| rng.random_range(2..10);
    let arch = Architecture {
        input_dim: d,
        encoder: (0..rng.random_range(1..4)).map(|_| width(&mut rng)).collect(),
        classifier: (0..rng.random_range(0..3)).map(|_| width(&mut rng)).collect(),
        decoder: (0..rng.random_range(0..3)).map(|_| width(&mut rng)).collect(),
        hidden_activation: if rng.random_bool(0.8) { Activation::Relu } else { Activation::Linear },
        with_decoder: rng.random_bool(0.85),
    };
    let mut params = NetworkParams::init(&arch, rng.random());
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let (p_known, masked) = match case % 10 {
        0 => (0.75, 0.0),
        1 => (1.0, 1.0),
        _ => (0.75, rng.random_range(0.0..1.0)),
    };
    let known: Vec<bool> = (0..d).map(|_| rng.random_bool(p_known)).collect();
    let train_mask: Vec<bool> = (0..d).map(|_| rng.random_bool(masked)).collect();
    let targets: Vec<f64> = (0..d).map(|i| if known[i] { rng.random_range(-2.0..2.0) } else { 0.0 }).collect();
    let values = (0..d).map(|i| if known[i] && !train_mask[i] { targets[i] } else { 0.0 }).collect();
    let sample = MaskedSample {
        values,
        targets,
        train_mask,
        known,
        label: rng.random_range(0..2),
        combo: None,
    };
    let eligible = if rng.random_bool(0.5) { EligibleSet::Intersection } else { EligibleSet::Union };
    let objective = match (arch.with_decoder, rng.random_range(0..4)) {
        (false, _) | (_, 0) => Objective::joint(0.0, eligible),
        (_, _) if case % 10 < 2 => Objective::joint(rng.random_range(0.1..3.0), eligible),
        (_, 1) => Objective::reconstruction_only(eligible),
        (_, 2) => Objective::classification_frozen_encoder(),
        _ => Objective::joint(rng.random_range(0.1..3.0), eligible),
    };
    (params, sample, objective)
}

/// Random gradient-check case `case` under `seed`. Draws are repeated until
/// no ReLU input sits within 1e-3 of its kink, where finite differences
/// are meaningless.
pub fn random_case(seed: u64, case: usize) -> (NetworkParams, MaskedSample, Objective) {
    (0u64..)
        .map(|k| draw(derive_seed(seed, &[tag("gradcheck"), case as u64, k]), case))
        .find(|(p, s, _)| !near_kink(p, s, 1e-3).unwrap_or(true))
        .expect("unbounded search")
}

/// Finite-difference check of backpropagation over `cases` random
/// configurations. Fails if any gradient exceeds the tolerance.
pub fn cmd_gradcheck(cases: usize, seed: u64) -> Result<GradcheckSummary> {
    if cases == 0 {
        bail!("--cases must be positive");
    }
    let mut summary = GradcheckSummary {
        cases,
        gradients: 0,
        max_relative_error: 0.0,
        tolerance: TOLERANCE,
        empty_eligible: 0,
        full_eligible: 0,
        failures: Vec::new(),
    };
    for case in 0..cases {
        let (p, s, o) = random_case(seed, case);
        let eligible = s.reconstruction_eligible().count();
        if o.lambda > 0.0 && eligible == 0 {
            summary.empty_eligible += 1;
        }
        if o.lambda > 0.0 && eligible == s.dim() {
            summary.full_eligible += 1;
        }
        let dims = p.layer_dims();
        let describe = || CaseResult {
            case,
            architecture: format!("{dims:?}"),
            objective: format!("{o:?}"),
            checked: 0,
            max_relative_error: f64::NAN,
            worst_tensor: String::new(),
        };
        match grad_check(&p, &s, &o, STEP, TOLERANCE) {
            Ok(r) => {
                summary.gradients += r.checked;
                summary.max_relative_error = summary.max_relative_error.max(r.max_relative_error);
            }
            Err(dfcn_core::Error::GradientMismatch { tensor, relative_error, .. }) => {
                summary.max_relative_error = summary.max_relative_error.max(relative_error);
                summary.failures.push(CaseResult {
                    max_relative_error: relative_error,
                    worst_tensor: tensor,
                    ..describe()
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(summary)
}
