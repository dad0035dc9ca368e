mod ablation;
mod gendata;
mod gradcheck;
mod report;
mod subset;
mod sweep;

use anyhow::{Context, Result};
use dfcn_core::data::{default_schema, load_dataset, split_validation, Dataset, SplitMembership, SplitTag};
use dfcn_core::models::{ModelKind, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::io::{write_json, OutDir};

pub use ablation::{cmd_ablation, AblationOutcome};
pub use gendata::{cmd_gen_data, GenDataArgs};
pub use gradcheck::{cmd_gradcheck, random_case, GradcheckSummary};
pub use report::cmd_report;
pub use subset::{cmd_subset, SubsetOutcome};
pub use sweep::{cmd_sweep, ManifestRow, SweepOutcome};

/// One selected checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedModel {
    pub kind: ModelKind,
    pub imp: f64,
    pub seed: u64,
    pub masked_val_auc: f64,
    /// Relative to the output directory.
    pub checkpoint: String,
}

/// The optimal and NIM model of one kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedPair {
    pub optimal: SelectedModel,
    pub nim: Option<SelectedModel>,
}

pub type Selection = std::collections::BTreeMap<ModelKind, SelectedPair>;

pub(crate) fn read_selection(out: &OutDir) -> Result<Selection> {
    let path = out.selected();
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("no model selection at {}; run `dfcn sweep` first", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Loads every requested checkpoint up front so a missing file fails
/// before any scoring starts.
pub(crate) fn load_checkpoints(out: &OutDir, entries: &[(String, &SelectedModel)]) -> Result<Vec<(String, TrainedModel)>> {
    let missing: Vec<String> = entries
        .iter()
        .map(|(_, m)| out.checkpoint(&m.checkpoint))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        anyhow::bail!("missing checkpoints: {}", missing.join(", "));
    }
    entries
        .iter()
        .map(|(name, m)| Ok((name.clone(), TrainedModel::load(out.checkpoint(&m.checkpoint))?)))
        .collect()
}

pub(crate) fn load_raw(cfg: &ExperimentConfig, path: &std::path::Path, what: &str, split: SplitTag) -> Result<Dataset> {
    cfg.require_file(path, what)?;
    load_dataset(path, &default_schema(), &cfg.load_options().with_split(split))
        .with_context(|| format!("loading {what} data from {}", path.display()))
}

/// Training file split into (train, validation) as configured; the
/// membership is written next to the outputs.
pub(crate) fn load_train_split(cfg: &ExperimentConfig, out: &OutDir) -> Result<(Dataset, Dataset)> {
    let full = load_raw(cfg, &cfg.paths.train, "training", SplitTag::Train)?;
    let layout = cfg.validation_layout(&full)?;
    let (train, val) = split_validation(&full, cfg.split_seed(), &layout).context("drawing the validation split")?;
    write_json(&out.path("split.json"), &SplitMembership::of(cfg.split_seed(), &layout, &train, &val))?;
    Ok((train, val))
}

pub(crate) fn ablation_name(kind: ModelKind, nim: bool) -> String {
    if nim {
        format!("NIM {kind}")
    } else {
        kind.to_string()
    }
}

pub(crate) fn checkpoint_name(prefix: &str, kind: ModelKind, imp: f64) -> String {
    format!("{prefix}checkpoints/{kind}_imp{imp}.json")
}
