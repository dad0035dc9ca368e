use anyhow::{Context, Result};
use dfcn_core::data::SplitTag;
use dfcn_core::eval::{significance_matrix, EvalReport, ScoreTable};
use dfcn_core::masking::{build_masked_eval_set, generate_combination_plan, CombinationPlan, PlanMode};
use dfcn_core::models::score_eval_set;
use dfcn_core::Execution;

use super::{ablation_name, load_checkpoints, load_raw, read_selection, SelectedModel};
use crate::config::ExperimentConfig;
use crate::io::{opt, write_atomic, write_atomic_with, write_csv, write_json, OutDir};

#[derive(Clone, Debug)]
pub struct AblationOutcome {
    pub table: ScoreTable,
    pub report: EvalReport,
}

fn test_plan_mode(cfg: &ExperimentConfig) -> PlanMode {
    match cfg.plans.test_per_length {
        1000 => PlanMode::Test,
        n => PlanMode::Custom { per_length: n },
    }
}

/// Reuses a stored plan when it was drawn with the same settings.
fn test_plan(cfg: &ExperimentConfig, out: &OutDir, n_features: usize) -> Result<CombinationPlan> {
    let path = out.path("plans/test_plan.json");
    let mode = test_plan_mode(cfg);
    let seed = cfg.test_plan_seed();
    if let Ok(text) = std::fs::read_to_string(&path) {
        match CombinationPlan::from_json(&text) {
            Ok(p) if p.n_features == n_features && p.mode == mode && p.seed == seed => {
                log::info!("reusing test plan {}", path.display());
                return Ok(p);
            }
            Ok(_) => log::info!("stored test plan has other settings; drawing a new one"),
            Err(e) => log::warn!("ignoring unreadable test plan {}: {e}", path.display()),
        }
    }
    let plan = generate_combination_plan(n_features, mode, seed)?;
    write_atomic(&path, plan.to_json()?.as_bytes())?;
    Ok(plan)
}

/// Optimal and NIM model of each selected kind, in canonical kind order.
pub(crate) fn ablation_models<'a>(cfg: &ExperimentConfig, sel: &'a super::Selection) -> Result<Vec<(String, &'a SelectedModel)>> {
    let mut out = Vec::new();
    for kind in &cfg.kinds {
        let pair = sel
            .get(kind)
            .with_context(|| format!("{kind} is not in the model selection; rerun `dfcn sweep` with it"))?;
        out.push((ablation_name(*kind, false), &pair.optimal));
        match &pair.nim {
            Some(n) => out.push((ablation_name(*kind, true), n)),
            None => log::warn!("no NIM model for {kind}; IMP 0 was not part of the sweep"),
        }
    }
    Ok(out)
}

/// Scores every selected model on the heavily masked test set and runs the
/// per-length AUC and pairwise significance analysis.
pub fn cmd_ablation(cfg: &ExperimentConfig, exec: Execution) -> Result<AblationOutcome> {
    cfg.validate()?;
    let out = OutDir(cfg.paths.out.clone());
    let selection = read_selection(&out)?;
    let models = load_checkpoints(&out, &ablation_models(cfg, &selection)?)?;
    let test = load_raw(cfg, &cfg.paths.test, "test", SplitTag::Test)?;
    let plan = test_plan(cfg, &out, test.dim())?;
    let set = build_masked_eval_set(&test, &plan, cfg.plans.drop_rule, exec)?;
    log::info!("heavily masked test set: {} samples from {} combinations", set.len(), plan.len());

    let mut table = ScoreTable::for_eval_set(&set);
    for (name, model) in &models {
        log::info!("scoring {name}");
        table.push_model(name.clone(), score_eval_set(model, &set, exec)?)?;
    }
    if cfg.plans.score_dump {
        write_atomic_with(&out.scores(), |w| Ok(table.write_csv_to(w)?))?;
    }
    let report = significance_matrix(&table, exec)?;
    write_report(&out.path("ablation"), &report)?;
    write_json(
        &out.path("ablation/test_set.json"),
        &serde_json::json!({
            "samples": set.len(),
            "positives": set.positives(),
            "combinations": plan.len(),
            "per_length_combinations": plan.per_length_counts,
            "drop_rule": cfg.plans.drop_rule,
        }),
    )?;
    Ok(AblationOutcome { table, report })
}

/// Per-length AUC, mean AUC, pairwise tests and worse-than counts.
pub(crate) fn write_report(dir: &std::path::Path, report: &EvalReport) -> Result<()> {
    let mut header = vec!["n", "samples", "positives"];
    header.extend(report.models.iter().map(String::as_str));
    let per_n: Vec<Vec<String>> = report
        .lengths
        .iter()
        .map(|&n| {
            let first = report.curves[0].entries.iter().find(|e| e.n == n);
            let mut row = vec![
                n.to_string(),
                first.map_or_else(String::new, |e| e.samples.to_string()),
                first.map_or_else(String::new, |e| e.positives.to_string()),
            ];
            row.extend(report.curves.iter().map(|c| opt(c.auc_at(n))));
            row
        })
        .collect();
    write_csv(&dir.join("per_n_auc.csv"), &header, &per_n)?;

    let mean: Vec<Vec<String>> = report
        .curves
        .iter()
        .map(|c| {
            let excluded = c.excluded.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
            vec![c.model.clone(), c.mean_auc.to_string(), excluded]
        })
        .collect();
    write_csv(&dir.join("mean_auc.csv"), &["model", "mean_auc", "excluded_lengths"], &mean)?;

    let tests: Vec<Vec<String>> = report
        .pairwise
        .iter()
        .map(|t| {
            vec![
                t.n.to_string(),
                t.model_a.clone(),
                t.model_b.clone(),
                t.auc_a.to_string(),
                t.auc_b.to_string(),
                t.z.to_string(),
                t.p.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("significance.csv"), &["n", "model_a", "model_b", "auc_a", "auc_b", "z", "p"], &tests)?;

    let lens: Vec<String> = report.lengths.iter().map(|n| n.to_string()).collect();
    let mut header = vec!["model"];
    header.extend(lens.iter().map(String::as_str));
    let worse: Vec<Vec<String>> = report
        .models
        .iter()
        .zip(&report.worse_counts)
        .map(|(m, counts)| std::iter::once(m.clone()).chain(counts.iter().map(|c| c.to_string())).collect())
        .collect();
    write_csv(&dir.join("worse_counts.csv"), &header, &worse)
}
