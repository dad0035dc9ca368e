use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dfcn_core::data::{default_schema, InputSubset, LoadOptions, ValidationLayout, SUBSET_A, SUBSET_B};
use dfcn_core::masking::DropRule;
use dfcn_core::models::{ForestConfig, ModelKind, ModelSpec, TrainingConfig};
use dfcn_core::nn::{Activation, Architecture};
use dfcn_core::rng::{derive_seed, tag};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: PathBuf,
    pub test: PathBuf,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            train: "data/train.csv".into(),
            test: "data/test.csv".into(),
            out: "out".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub label_column: String,
    pub subject_column: String,
    pub view_column: String,
    pub missing_tokens: Vec<String>,
    /// Records per label in the validation set; unset uses 43 PA + 8 AP per
    /// label when views are present and 51 per label otherwise.
    pub validation_per_label: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let o = LoadOptions::default();
        DataConfig {
            label_column: o.label_column,
            subject_column: o.subject_column,
            view_column: o.view_column,
            missing_tokens: o.missing_tokens,
            validation_per_label: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub wide_encoder: Vec<usize>,
    pub wide_classifier: Vec<usize>,
    pub wide_decoder: Vec<usize>,
    pub bottleneck_encoder: Vec<usize>,
    pub bottleneck_classifier: Vec<usize>,
    pub bottleneck_decoder: Vec<usize>,
    pub hidden_activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let w = Architecture::wide(28);
        let b = Architecture::bottleneck(28);
        NetworkConfig {
            wide_encoder: w.encoder,
            wide_classifier: w.classifier,
            wide_decoder: w.decoder,
            bottleneck_encoder: b.encoder,
            bottleneck_classifier: b.classifier,
            bottleneck_decoder: b.decoder,
            hidden_activation: Activation::Relu,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    /// Seeds of the two combination plans; unset derives them from `seed`.
    pub validation_seed: Option<u64>,
    pub test_seed: Option<u64>,
    /// Cap per combination length of the test plan (1000 reproduces the
    /// 23,813-combination plan).
    pub test_per_length: usize,
    pub drop_rule: DropRule,
    /// Write the raw per-sample score dump of the ablation.
    pub score_dump: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            validation_seed: None,
            test_seed: None,
            test_per_length: 1000,
            drop_rule: DropRule::AllKeptObserved,
            score_dump: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub kinds: Vec<ModelKind>,
    pub imp_grid: Vec<f64>,
    pub lambda: f64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub paths: Paths,
    pub data: DataConfig,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub forest: ForestConfig,
    pub plans: PlanConfig,
    /// Named feature subsets; `A` and `B` are predefined.
    pub subsets: BTreeMap<String, Vec<String>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let subsets = [("A", &SUBSET_A[..]), ("B", &SUBSET_B[..])]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect();
        ExperimentConfig {
            seed: 2021,
            kinds: ModelKind::ALL.to_vec(),
            imp_grid: (0..10).map(|i| i as f64 / 10.0).collect(),
            lambda: 1.0,
            jobs: 0,
            paths: Paths::default(),
            data: DataConfig::default(),
            network: NetworkConfig::default(),
            training: TrainingConfig::default(),
            forest: ForestConfig::default(),
            plans: PlanConfig::default(),
            subsets,
        }
    }
}

/// Command-line values that override config keys.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub kinds: Option<Vec<ModelKind>>,
    pub imp_grid: Option<Vec<f64>>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a TOML config; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.paths.train, &mut cfg.paths.test, &mut cfg.paths.out] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out {
            self.paths.out = p.clone();
        }
        if let Some(k) = &o.kinds {
            self.kinds = k.clone();
        }
        if let Some(g) = &o.imp_grid {
            self.imp_grid = g.clone();
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.kinds.is_empty(), "no model kinds selected");
        ensure!(!self.imp_grid.is_empty(), "IMP grid is empty");
        for &imp in &self.imp_grid {
            ensure!((0.0..=1.0).contains(&imp), "IMP {imp} outside [0, 1]");
        }
        ensure!(self.lambda >= 0.0 && self.lambda.is_finite(), "lambda must be a nonnegative number");
        ensure!(self.plans.test_per_length > 0, "test_per_length must be positive");
        for k in &self.kinds {
            self.spec(*k, 0.0, 0).validate().with_context(|| format!("settings for {k}"))?;
        }
        Ok(())
    }

    pub fn require_file(&self, path: &Path, what: &str) -> Result<()> {
        if !path.is_file() {
            bail!("{what} file {} does not exist", path.display());
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_column: self.data.label_column.clone(),
            subject_column: self.data.subject_column.clone(),
            view_column: self.data.view_column.clone(),
            missing_tokens: self.data.missing_tokens.clone(),
            ..LoadOptions::default()
        }
    }

    pub fn validation_layout(&self, ds: &dfcn_core::data::Dataset) -> Result<ValidationLayout> {
        Ok(match self.data.validation_per_label {
            Some(n) => ValidationLayout::Balanced { per_label: n },
            None => ValidationLayout::default_for(ds),
        })
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, &[tag("split")])
    }

    pub fn validation_plan_seed(&self) -> u64 {
        self.plans.validation_seed.unwrap_or_else(|| derive_seed(self.seed, &[tag("validation-plan")]))
    }

    pub fn test_plan_seed(&self) -> u64 {
        self.plans.test_seed.unwrap_or_else(|| derive_seed(self.seed, &[tag("test-plan")]))
    }

    pub fn architecture(&self, kind: ModelKind, input_dim: usize) -> Architecture {
        let n = &self.network;
        let (encoder, classifier, decoder) = match kind {
            ModelKind::Dae | ModelKind::Sdae => (&n.bottleneck_encoder, &n.bottleneck_classifier, &n.bottleneck_decoder),
            _ => (&n.wide_encoder, &n.wide_classifier, &n.wide_decoder),
        };
        Architecture {
            input_dim,
            encoder: encoder.clone(),
            classifier: classifier.clone(),
            decoder: decoder.clone(),
            hidden_activation: n.hidden_activation,
            with_decoder: kind != ModelKind::Fcn,
        }
    }

    /// Full model spec for one (kind, IMP) task.
    pub fn spec(&self, kind: ModelKind, imp: f64, seed: u64) -> ModelSpec {
        let input_dim = default_schema().len();
        let mut s = ModelSpec::new(kind, imp, seed, input_dim);
        s.architecture = self.architecture(kind, input_dim);
        s.lambda = if kind == ModelKind::Fcn { 0.0 } else { self.lambda };
        s.training = self.training.clone();
        s.forest = self.forest.clone();
        s
    }

    pub fn subset(&self, name: &str) -> Result<InputSubset> {
        let schema = default_schema();
        if name.eq_ignore_ascii_case("all") {
            return Ok(InputSubset {
                name: "all".into(),
                ..InputSubset::all(schema.len())
            });
        }
        let (key, features) = self
            .subsets
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .with_context(|| format!("unknown subset {name:?}; defined: all, {}", self.subsets.keys().cloned().collect::<Vec<_>>().join(", ")))?;
        Ok(InputSubset::from_names(key, features, &schema)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
        assert_eq!(cfg.imp_grid.len(), 10);
        assert_eq!(cfg.kinds.len(), 5);
    }

    #[test]
    fn partial_config_and_overrides() {
        let mut cfg: ExperimentConfig = toml::from_str("seed = 5\nimp_grid = [0.3]\n[training]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.training.epochs, 3);
        assert_eq!(cfg.training.batch_size, 32);
        cfg.apply(&Overrides {
            seed: Some(9),
            kinds: Some(vec![ModelKind::Rf]),
            ..Overrides::default()
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.kinds, vec![ModelKind::Rf]);
        assert!(toml::from_str::<ExperimentConfig>("sede = 5").is_err());
        cfg.imp_grid = vec![1.2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn subsets_resolve() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.subset("a").unwrap().len(), 6);
        assert_eq!(cfg.subset("a").unwrap().name, "A");
        assert_eq!(cfg.subset("B").unwrap().len(), 7);
        assert_eq!(cfg.subset("all").unwrap().len(), 28);
        assert!(cfg.subset("C").is_err());
    }
}
