use serde::{Deserialize, Serialize};

use super::{masked_auc, train, ModelKind, ModelSpec, TrainedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::masking::MaskedEvalSet;
use crate::rng::derive_seed;

/// Seed of the (kind, IMP) training task under `master`. IMP enters as
/// thousandths so 0.3 and 0.30000000000000004 coincide.
pub fn task_seed(master: u64, kind: ModelKind, imp: f64) -> u64 {
    derive_seed(master, &[kind.id(), (imp * 1000.0).round() as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpRow {
    pub kind: ModelKind,
    pub imp: f64,
    pub seed: u64,
    pub masked_val_auc: f64,
    pub selected: bool,
}

#[derive(Clone, Debug)]
pub struct ImpSelection {
    pub best: TrainedModel,
    pub table: Vec<ImpRow>,
}

/// Trains `base.kind` at every IMP of the grid and keeps the model with the
/// highest pooled AUC on the heavily masked validation set. Ties go to the
/// lower IMP.
pub fn select_best_imp(
    base: &ModelSpec,
    grid: &[f64],
    master_seed: u64,
    train_ds: &Dataset,
    val: &Dataset,
    masked_val: &MaskedEvalSet,
    exec: Execution,
) -> Result<ImpSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("IMP grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let results = exec.try_map(&grid, |&imp| -> Result<(TrainedModel, f64)> {
        let mut spec = base.clone();
        spec.imp = imp;
        spec.seed = task_seed(master_seed, base.kind, imp);
        let ctx = || format!("{} at IMP {imp}", base.kind);
        let model = train(&spec, train_ds, val).map_err(|e| e.context(ctx()))?;
        let auc = masked_auc(&model, masked_val, Execution::Sequential).map_err(|e| e.context(ctx()))?;
        Ok((model, auc))
    })?;
    let best = (0..results.len()).fold(0, |b, i| if results[i].1 > results[b].1 { i } else { b });
    let table = results
        .iter()
        .enumerate()
        .map(|(i, (m, auc))| ImpRow {
            kind: base.kind,
            imp: m.spec.imp,
            seed: m.spec.seed,
            masked_val_auc: *auc,
            selected: i == best,
        })
        .collect();
    let best = results.into_iter().nth(best).expect("nonempty grid").0;
    Ok(ImpSelection { best, table })
}
