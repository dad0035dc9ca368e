use anyhow::{bail, Result};
use dfcn_core::data::{Dataset, Normalizer};
use dfcn_core::masking::{build_masked_eval_set, generate_combination_plan, MaskedEvalSet, PlanMode};
use dfcn_core::models::{masked_auc, task_seed, train, ModelKind, TrainedModel};
use dfcn_core::Execution;
use serde::{Deserialize, Serialize};

use super::{checkpoint_name, load_train_split, SelectedModel, SelectedPair, Selection};
use crate::config::ExperimentConfig;
use crate::io::{opt, write_atomic, write_csv, write_json, OutDir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub kind: ModelKind,
    pub imp: f64,
    pub seed: u64,
    pub ok: bool,
    /// Pooled AUC on the heavily masked validation set.
    pub masked_val_auc: Option<f64>,
    /// AUC on the IMP-masked validation copy used for checkpoint selection.
    pub checkpoint_val_auc: Option<f64>,
    pub selected_epoch: Option<usize>,
    pub checkpoint: String,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<ManifestRow>,
    pub selection: Selection,
}

/// Sorted, de-duplicated grid.
pub(crate) fn grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut g = cfg.imp_grid.clone();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Data and naming shared by every task of a grid.
#[derive(Clone, Copy)]
pub(crate) struct GridInputs<'a> {
    /// Prepended to checkpoint paths.
    pub prefix: &'a str,
    pub master_seed: u64,
    pub train: &'a Dataset,
    pub val: &'a Dataset,
    pub masked_val: &'a MaskedEvalSet,
    pub normalizer: Option<&'a Normalizer>,
}

/// Trains one model per (kind, IMP), scores each on `masked_val` and saves
/// its checkpoint. Failures become manifest rows instead of errors. When
/// the inputs arrive pre-normalized, `normalizer` is the transform that was
/// applied and gets stored with each model.
pub(crate) fn train_grid(cfg: &ExperimentConfig, out: &OutDir, grid_in: &GridInputs<'_>, exec: Execution) -> Vec<ManifestRow> {
    let GridInputs {
        prefix,
        master_seed,
        train: train_ds,
        val,
        masked_val,
        normalizer,
    } = *grid_in;
    let tasks: Vec<(ModelKind, f64)> = cfg.kinds.iter().flat_map(|&k| grid(cfg).into_iter().map(move |imp| (k, imp))).collect();
    exec.map(&tasks, |&(kind, imp)| {
        let seed = task_seed(master_seed, kind, imp);
        let checkpoint = checkpoint_name(prefix, kind, imp);
        let result = (|| -> Result<(TrainedModel, f64)> {
            let mut model = train(&cfg.spec(kind, imp, seed), train_ds, val)?;
            if let Some(n) = normalizer {
                model.normalizer = n.clone();
            }
            let auc = masked_auc(&model, masked_val, Execution::Sequential)?;
            write_atomic(&out.checkpoint(&checkpoint), model.to_json()?.as_bytes())?;
            Ok((model, auc))
        })();
        match result {
            Ok((m, auc)) => {
                log::info!("{kind} IMP {imp}: masked validation AUC {auc:.4}");
                ManifestRow {
                    kind,
                    imp,
                    seed,
                    ok: true,
                    masked_val_auc: Some(auc),
                    checkpoint_val_auc: m.log.val_auc,
                    selected_epoch: m.log.selected_epoch,
                    checkpoint,
                    error: String::new(),
                }
            }
            Err(e) => {
                log::error!("{kind} IMP {imp} failed: {e:#}");
                ManifestRow {
                    kind,
                    imp,
                    seed,
                    ok: false,
                    masked_val_auc: None,
                    checkpoint_val_auc: None,
                    selected_epoch: None,
                    checkpoint: String::new(),
                    error: format!("{e:#}"),
                }
            }
        }
    })
}

/// Best row per kind (ties to the lower IMP) and the NIM row.
pub(crate) fn select(rows: &[ManifestRow], kinds: &[ModelKind]) -> (Selection, Vec<ModelKind>) {
    let mut selection = Selection::new();
    let mut failed = Vec::new();
    for &kind in kinds {
        let ok: Vec<&ManifestRow> = rows.iter().filter(|r| r.kind == kind && r.ok).collect();
        let as_selected = |r: &ManifestRow| SelectedModel {
            kind,
            imp: r.imp,
            seed: r.seed,
            masked_val_auc: r.masked_val_auc.unwrap_or(f64::NAN),
            checkpoint: r.checkpoint.clone(),
        };
        let Some(best) = ok.iter().copied().reduce(|b, r| if r.masked_val_auc > b.masked_val_auc { r } else { b }) else {
            failed.push(kind);
            continue;
        };
        selection.insert(
            kind,
            SelectedPair {
                optimal: as_selected(best),
                nim: ok.iter().find(|r| r.imp == 0.0).map(|r| as_selected(r)),
            },
        );
    }
    (selection, failed)
}

pub(crate) fn manifest_csv(rows: &[ManifestRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["kind", "imp", "seed", "status", "masked_val_auc", "checkpoint_val_auc", "selected_epoch", "checkpoint", "error"];
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.to_string(),
                r.imp.to_string(),
                r.seed.to_string(),
                if r.ok { "ok" } else { "failed" }.to_string(),
                opt(r.masked_val_auc),
                opt(r.checkpoint_val_auc),
                r.selected_epoch.map_or_else(String::new, |e| e.to_string()),
                r.checkpoint.clone(),
                r.error.replace([',', '\n'], ";"),
            ]
        })
        .collect();
    (header, body)
}

/// Trains the IMP grid for every configured kind and picks each kind's model
/// on the heavily masked validation set.
pub fn cmd_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepOutcome> {
    cfg.validate()?;
    let out = OutDir(cfg.paths.out.clone());
    let (train_ds, val) = load_train_split(cfg, &out)?;
    let plan = generate_combination_plan(train_ds.dim(), PlanMode::Validation, cfg.validation_plan_seed())?;
    write_atomic(&out.path("plans/validation_plan.json"), plan.to_json()?.as_bytes())?;
    let masked_val = build_masked_eval_set(&val, &plan, cfg.plans.drop_rule, exec)?;
    log::info!(
        "heavily masked validation set: {} samples ({} positive) from {} combinations",
        masked_val.len(),
        masked_val.positives(),
        plan.len()
    );
    write_atomic(&out.path("config.toml"), toml::to_string(cfg)?.as_bytes())?;

    let inputs = GridInputs {
        prefix: "",
        master_seed: cfg.seed,
        train: &train_ds,
        val: &val,
        masked_val: &masked_val,
        normalizer: None,
    };
    let rows = train_grid(cfg, &out, &inputs, exec);
    let (header, body) = manifest_csv(&rows);
    write_csv(&out.manifest(), &header, &body)?;
    let (selection, failed) = select(&rows, &cfg.kinds);

    let table: Vec<Vec<String>> = selection
        .iter()
        .map(|(k, p)| {
            vec![
                k.to_string(),
                p.optimal.imp.to_string(),
                p.optimal.masked_val_auc.to_string(),
                p.nim.as_ref().map_or_else(String::new, |n| n.masked_val_auc.to_string()),
            ]
        })
        .collect();
    write_csv(&out.imp_summary(), &["kind", "optimal_imp", "optimal_masked_val_auc", "nim_masked_val_auc"], &table)?;
    write_json(&out.selected(), &selection)?;
    write_json(
        &out.path("validation_set.json"),
        &serde_json::json!({
            "samples": masked_val.len(),
            "positives": masked_val.positives(),
            "combinations": plan.len(),
            "drop_rule": cfg.plans.drop_rule,
        }),
    )?;
    if !failed.is_empty() {
        bail!(
            "every model failed for {}; see {}",
            failed.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "),
            out.manifest().display()
        );
    }
    Ok(SweepOutcome { rows, selection })
}
