use anyhow::{Context, Result};
use dfcn_core::data::{apply_normalizer, fit_normalizer, restrict_to_subset, Dataset, InputSubset, SplitTag};
use dfcn_core::eval::{evaluate_subset, roc_auc, ScoreTable, SubsetRow};
use dfcn_core::masking::{build_masked_eval_set, CombinationPlan, DropRule, InputCombination, PlanMode};
use dfcn_core::models::{score_dataset, TrainedModel};
use dfcn_core::rng::{derive_seed, tag};
use dfcn_core::Execution;

use super::sweep::{manifest_csv, select, train_grid, GridInputs};
use super::{load_checkpoints, load_raw, load_train_split, read_selection};
use crate::config::ExperimentConfig;
use crate::io::{write_atomic_with, write_csv, write_json, OutDir};

#[derive(Clone, Debug)]
pub struct SubsetOutcome {
    pub subset: InputSubset,
    pub rows: Vec<SubsetRow>,
    pub table: ScoreTable,
}

/// Test records for a section: the unmodified test set for `all`, complete
/// cases with every other feature hidden for a named subset.
fn section_test_set(test: &Dataset, subset: &InputSubset) -> Result<Dataset> {
    if subset.name == "all" {
        return Ok(test.clone());
    }
    restrict_to_subset(test, subset, true).with_context(|| format!("test set for subset {}", subset.name))
}

/// Retrains every kind on the subset's features alone and selects the IMP
/// on the validation set seen through the subset.
fn retrain(cfg: &ExperimentConfig, out: &OutDir, subset: &InputSubset, exec: Execution) -> Result<Vec<(String, TrainedModel)>> {
    let (train_ds, val) = load_train_split(cfg, out)?;
    let normalizer = fit_normalizer(&train_ds)?;
    let train_ds = restrict_to_subset(&apply_normalizer(&train_ds, &normalizer)?, subset, false)?;
    let val = restrict_to_subset(&apply_normalizer(&val, &normalizer)?, subset, false)?;
    let combo = InputCombination {
        kept: subset.indices.iter().copied().collect(),
    };
    let plan = CombinationPlan::from_combinations(val.dim(), PlanMode::Custom { per_length: 1 }, 0, vec![combo])?;
    let masked_val = build_masked_eval_set(&val, &plan, DropRule::AnyKeptObserved, exec)?;

    let prefix = format!("subset_{}/", subset.name);
    let inputs = GridInputs {
        prefix: &prefix,
        master_seed: derive_seed(cfg.seed, &[tag("subset"), tag(&subset.name)]),
        train: &train_ds,
        val: &val,
        masked_val: &masked_val,
        normalizer: Some(&normalizer),
    };
    let rows = train_grid(cfg, out, &inputs, exec);
    let (header, body) = manifest_csv(&rows);
    write_csv(&out.path(&format!("{prefix}retrain_manifest.csv")), &header, &body)?;
    let (selection, failed) = select(&rows, &cfg.kinds);
    write_json(&out.path(&format!("{prefix}retrain_selected.json")), &selection)?;
    if !failed.is_empty() {
        anyhow::bail!("retraining failed for every IMP of {failed:?}");
    }
    let entries: Vec<(String, &super::SelectedModel)> = selection
        .iter()
        .map(|(k, p)| (format!("{k} (subset {})", subset.name), &p.optimal))
        .collect();
    load_checkpoints(out, &entries)
}

/// AUC of the optimal models on one input subset, starred against the best
/// model of the section, with ROC curves for every model.
pub fn cmd_subset(cfg: &ExperimentConfig, name: &str, retrain_models: bool, exec: Execution) -> Result<SubsetOutcome> {
    cfg.validate()?;
    let subset = cfg.subset(name)?;
    let out = OutDir(cfg.paths.out.clone());
    let selection = read_selection(&out)?;
    let mut entries = Vec::new();
    for kind in &cfg.kinds {
        let pair = selection
            .get(kind)
            .with_context(|| format!("{kind} is not in the model selection; rerun `dfcn sweep` with it"))?;
        entries.push((kind.to_string(), &pair.optimal));
    }
    let mut models = load_checkpoints(&out, &entries)?;
    let test = section_test_set(&load_raw(cfg, &cfg.paths.test, "test", SplitTag::Test)?, &subset)?;
    log::info!("subset {}: {} test records ({} positive)", subset.name, test.len(), test.positives());
    if retrain_models {
        models.extend(retrain(cfg, &out, &subset, exec)?);
    }

    let scored = models
        .iter()
        .map(|(n, m)| Ok((n.clone(), score_dataset(m, &test, exec).with_context(|| format!("scoring {n}"))?)))
        .collect::<Result<Vec<_>>>()?;
    let labels = test.labels();
    let rows = evaluate_subset(&scored, &labels)?;

    let dir = out.path(&format!("subset_{}", subset.name));
    let table = ScoreTable {
        sample_ids: test.records.iter().map(|r| r.subject_id.clone()).collect(),
        combination_ids: vec![0; test.len()],
        lengths: test.records.iter().map(|r| r.observed_count()).collect(),
        labels: labels.clone(),
        models: scored.iter().map(|(n, _)| n.clone()).collect(),
        scores: scored.iter().map(|(_, s)| s.clone()).collect(),
    };
    write_atomic_with(&dir.join("scores.csv"), |w| Ok(table.write_csv_to(w)?))?;
    write_subset_outputs(&dir, &rows, &table)?;
    Ok(SubsetOutcome { subset, rows, table })
}

pub(crate) fn write_subset_outputs(dir: &std::path::Path, rows: &[SubsetRow], table: &ScoreTable) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.samples.to_string(),
                r.positives.to_string(),
                r.auc.to_string(),
                r.p_vs_best.to_string(),
                if r.significantly_lower { "*" } else { "" }.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("table.csv"), &["model", "samples", "positives", "auc", "p_vs_best", "significantly_lower"], &body)?;
    for (name, scores) in table.models.iter().zip(&table.scores) {
        let roc = roc_auc(scores, &table.labels)?;
        let pts: Vec<Vec<String>> = roc.points.iter().map(|(f, t)| vec![f.to_string(), t.to_string()]).collect();
        write_csv(&dir.join("roc").join(format!("{}.csv", file_stem(name))), &["fpr", "tpr"], &pts)?;
    }
    Ok(())
}

/// Model name usable as a file name.
pub(crate) fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
