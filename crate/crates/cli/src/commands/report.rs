use anyhow::{bail, Context, Result};
use dfcn_core::eval::{evaluate_subset, significance_matrix, ScoreTable};
use dfcn_core::Execution;

use super::ablation::write_report;
use super::subset::write_subset_outputs;
use crate::config::ExperimentConfig;
use crate::io::{opt, write_csv, OutDir};

/// Rebuilds every table and plot series from the stored score dumps. No
/// model is loaded and nothing is retrained.
pub fn cmd_report(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<std::path::PathBuf>> {
    let out = OutDir(cfg.paths.out.clone());
    if !out.0.is_dir() {
        bail!("output directory {} does not exist; run `dfcn sweep` and `dfcn ablation` first", out.0.display());
    }
    let dump = out.scores();
    if !dump.is_file() {
        bail!(
            "no score dump at {}; run `dfcn ablation` (with plans.score_dump = true) before `dfcn report`",
            dump.display()
        );
    }
    let dir = out.report_dir();
    let table = ScoreTable::read_csv(&dump).with_context(|| format!("reading {}", dump.display()))?;
    let report = significance_matrix(&table, exec)?;
    write_report(&dir, &report)?;

    let series: Vec<Vec<String>> = report
        .curves
        .iter()
        .flat_map(|c| {
            c.entries.iter().map(move |e| {
                vec![c.model.clone(), e.n.to_string(), opt(e.auc), e.samples.to_string(), e.positives.to_string()]
            })
        })
        .collect();
    write_csv(&dir.join("per_n_series.csv"), &["model", "n", "auc", "samples", "positives"], &series)?;
    let steps: Vec<Vec<String>> = report
        .models
        .iter()
        .zip(&report.worse_counts)
        .flat_map(|(m, counts)| {
            report
                .lengths
                .iter()
                .zip(counts)
                .map(move |(n, c)| vec![m.clone(), n.to_string(), c.to_string()])
        })
        .collect();
    write_csv(&dir.join("significance_steps.csv"), &["model", "n", "worse_count"], &steps)?;

    let mut written = vec![dir.clone()];
    let mut sections: Vec<_> = std::fs::read_dir(&out.0)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("scores.csv").is_file())
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("subset_")))
        .collect();
    sections.sort();
    for section in sections {
        let table = ScoreTable::read_csv(section.join("scores.csv"))?;
        let models: Vec<(String, Vec<f64>)> = table.models.iter().cloned().zip(table.scores.iter().cloned()).collect();
        let rows = evaluate_subset(&models, &table.labels)?;
        let target = dir.join(section.file_name().expect("directory entry has a name"));
        write_subset_outputs(&target, &rows, &table)?;
        written.push(target);
    }
    Ok(written)
}
