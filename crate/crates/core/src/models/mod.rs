//! The five training procedures of the ablation study, prediction and
//! IMP model selection.

mod forest;
mod network;
mod select;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{apply_normalizer, fit_normalizer, Dataset, Normalizer};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::exec::Execution;
use crate::masking::{MaskedEvalSet, MaskedSample};
use crate::nn::{AdamConfig, Architecture, EligibleSet, Forward, NetworkParams};

pub use forest::{train_rf, train_rf_with, DecisionTree, FeatureRule, Forest, ForestMasking, LEAF};
pub use network::{train_dae, train_dfcn, train_fcn, train_sdae};
pub use select::{select_best_imp, task_seed, ImpRow, ImpSelection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Dfcn,
    Fcn,
    Dae,
    Sdae,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Dfcn, ModelKind::Fcn, ModelKind::Dae, ModelKind::Sdae, ModelKind::Rf];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dfcn => "DFCN",
            ModelKind::Fcn => "FCN",
            ModelKind::Dae => "DAE",
            ModelKind::Sdae => "SDAE",
            ModelKind::Rf => "RF",
        }
    }

    /// Stream identifier used in seed derivation.
    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn is_network(self) -> bool {
        self != ModelKind::Rf
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model kind {s:?} (expected DFCN, FCN, DAE, SDAE or RF)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// DAE reconstruction pre-training epochs; `None` uses `epochs`.
    pub pretrain_epochs: Option<usize>,
    /// Number of independently masked copies of the validation set used for
    /// checkpoint selection.
    pub val_mask_replicas: usize,
    pub eligible: EligibleSet,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 60,
            batch_size: 32,
            adam: AdamConfig::default(),
            pretrain_epochs: None,
            val_mask_replicas: 10,
            eligible: EligibleSet::Intersection,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: FeatureRule,
    pub masking: ForestMasking,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 500,
            max_depth: None,
            min_leaf: 2,
            features_per_split: FeatureRule::Sqrt,
            masking: ForestMasking::PerBootstrapDraw,
            bootstrap: true,
        }
    }
}

/// Everything needed to train one model. Fields a kind does not use are
/// kept and recorded anyway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub imp: f64,
    pub lambda: f64,
    pub architecture: Architecture,
    pub training: TrainingConfig,
    pub forest: ForestConfig,
    pub seed: u64,
}

impl ModelSpec {
    /// Default settings for `kind`: wide layers for DFCN/FCN, the 8-unit
    /// bottleneck for DAE/SDAE, no decoder for FCN.
    pub fn new(kind: ModelKind, imp: f64, seed: u64, input_dim: usize) -> Self {
        let mut architecture = match kind {
            ModelKind::Dae | ModelKind::Sdae => Architecture::bottleneck(input_dim),
            _ => Architecture::wide(input_dim),
        };
        if kind == ModelKind::Fcn {
            architecture.with_decoder = false;
        }
        ModelSpec {
            kind,
            imp,
            lambda: if kind == ModelKind::Fcn { 0.0 } else { 1.0 },
            architecture,
            training: TrainingConfig::default(),
            forest: ForestConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.imp) {
            return Err(Error::InvalidConfig(format!("imp must lie in [0, 1], got {}", self.imp)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be a nonnegative number, got {}", self.lambda)));
        }
        if self.kind.is_network() {
            if self.training.batch_size == 0 {
                return Err(Error::InvalidConfig("batch_size must be positive".into()));
            }
            if self.architecture.input_dim == 0 {
                return Err(Error::InvalidConfig("input_dim must be positive".into()));
            }
            if matches!(self.kind, ModelKind::Dae | ModelKind::Sdae) && !self.architecture.is_bottleneck() {
                return Err(Error::InvalidConfig(format!(
                    "{} needs an encoding narrower than the input ({} >= {})",
                    self.kind,
                    self.architecture.encoding_dim(),
                    self.architecture.input_dim
                )));
            }
            if matches!(self.kind, ModelKind::Dae | ModelKind::Sdae | ModelKind::Dfcn) && !self.architecture.with_decoder {
                return Err(Error::InvalidConfig(format!("{} needs a decoder", self.kind)));
            }
        } else {
            if self.forest.trees == 0 {
                return Err(Error::InvalidConfig("forest needs at least one tree".into()));
            }
            if self.forest.min_leaf == 0 {
                return Err(Error::InvalidConfig("min_leaf must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1 for DAE reconstruction pre-training, 0 otherwise.
    pub phase: u8,
    pub epoch: usize,
    /// Means over the epoch's training samples.
    pub classification: f64,
    pub reconstruction: f64,
    pub objective: f64,
    pub val_auc: Option<f64>,
    /// Checksum of encoder and classifier parameters at the end of the epoch.
    pub trunk_checksum: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub selected_epoch: Option<usize>,
    /// AUC on the IMP-masked validation copy of the retained parameters.
    pub val_auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelParams {
    Network(NetworkParams),
    Forest(Forest),
}

/// A trained model with everything needed to reproduce its scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub normalizer: Normalizer,
    pub params: ModelParams,
    pub log: TrainingLog,
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        self.normalizer.dim()
    }

    pub fn network(&self) -> Option<&NetworkParams> {
        match &self.params {
            ModelParams::Network(p) => Some(p),
            ModelParams::Forest(_) => None,
        }
    }

    /// Brings a dataset into the model's input space. Already normalized
    /// datasets pass through unchanged.
    pub fn prepare(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.normalized {
            if ds.dim() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    got: ds.dim(),
                });
            }
            return Ok(ds.clone());
        }
        apply_normalizer(ds, &self.normalizer)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if let ModelParams::Network(p) = &m.params {
            p.validate()?;
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(format!("checkpoint {}", path.display())))
    }
}

/// Reusable per-worker buffers for scoring.
pub struct Scorer<'a> {
    model: &'a TrainedModel,
    fwd: Option<Forward>,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a TrainedModel) -> Self {
        let fwd = model.network().map(Forward::for_network);
        Scorer { model, fwd }
    }

    /// Positive-class probability of a normalized input vector.
    pub fn score(&mut self, input: &[f64]) -> Result<f64> {
        if input.len() != self.model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.model.input_dim(),
                got: input.len(),
            });
        }
        match (&self.model.params, &mut self.fwd) {
            (ModelParams::Network(p), Some(fwd)) => p.predict_input(input, fwd),
            (ModelParams::Forest(f), _) => Ok(f.predict(input)),
            (ModelParams::Network(_), None) => unreachable!("scorer built for a forest"),
        }
    }
}

/// Positive-class probability for one masked sample in normalized space.
pub fn predict(model: &TrainedModel, sample: &MaskedSample) -> Result<f64> {
    Scorer::new(model).score(&sample.values)
}

const SCORE_CHUNK: usize = 2048;

/// Scores every sample of a heavily masked evaluation set, in set order.
pub fn score_eval_set(model: &TrainedModel, set: &MaskedEvalSet, exec: Execution) -> Result<Vec<f64>> {
    let prepared;
    let ds = if set.dataset.normalized {
        &set.dataset
    } else {
        prepared = model.prepare(&set.dataset)?;
        &prepared
    };
    let chunks = exec.map_chunks(set.len(), SCORE_CHUNK, |range| -> Result<Vec<f64>> {
        let mut scorer = Scorer::new(model);
        let mut buf = vec![0.0; set.dim()];
        range
            .map(|i| {
                set.fill_input_with(ds, i, &mut buf);
                scorer.score(&buf)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(set.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Scores every record of a dataset with nothing masked.
pub fn score_dataset(model: &TrainedModel, ds: &Dataset, exec: Execution) -> Result<Vec<f64>> {
    let ds = model.prepare(ds)?;
    let chunks = exec.map_chunks(ds.len(), SCORE_CHUNK, |range| -> Result<Vec<f64>> {
        let mut scorer = Scorer::new(model);
        range.map(|i| scorer.score(&ds.records[i].values)).collect()
    });
    let mut out = Vec::with_capacity(ds.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Pooled AUC over a heavily masked evaluation set.
pub fn masked_auc(model: &TrainedModel, set: &MaskedEvalSet, exec: Execution) -> Result<f64> {
    let scores = score_eval_set(model, set, exec)?;
    Ok(roc_auc(&scores, &set.labels())?.auc)
}

/// Trains `spec.kind` on raw or normalized data.
pub fn train(spec: &ModelSpec, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    match spec.kind {
        ModelKind::Dfcn => train_dfcn(spec, train, val),
        ModelKind::Fcn => train_fcn(spec, train, val),
        ModelKind::Dae => train_dae(spec, train, val),
        ModelKind::Sdae => train_sdae(spec, train, val),
        ModelKind::Rf => train_rf(spec, train, val),
    }
}

/// Fits the normalizer on `train` unless it is already normalized, and
/// returns both datasets in normalized space.
pub(crate) fn normalize_pair(train: &Dataset, val: &Dataset) -> Result<(Normalizer, Dataset, Dataset)> {
    if train.dim() != val.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: val.dim(),
        });
    }
    if train.is_empty() {
        return Err(Error::InvalidDataset("training set is empty".into()));
    }
    let normalizer = if train.normalized {
        Normalizer::identity(train.feature_names.clone())
    } else {
        fit_normalizer(train)?
    };
    Ok((normalizer.clone(), apply_normalizer(train, &normalizer)?, apply_normalizer(val, &normalizer)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(k.name().to_lowercase().parse::<ModelKind>().unwrap(), k);
        }
        assert!("MLP".parse::<ModelKind>().is_err());
    }

    #[test]
    fn spec_defaults_per_kind() {
        let s = ModelSpec::new(ModelKind::Sdae, 0.3, 1, 28);
        assert!(s.architecture.is_bottleneck());
        s.validate().unwrap();
        let f = ModelSpec::new(ModelKind::Fcn, 0.3, 1, 28);
        assert_eq!(f.lambda, 0.0);
        assert!(!f.architecture.with_decoder);
        let mut bad = ModelSpec::new(ModelKind::Dae, 0.3, 1, 28);
        bad.architecture = Architecture::wide(28);
        bad.architecture.encoder = vec![64, 28];
        assert!(bad.validate().is_err());
        let mut imp = ModelSpec::new(ModelKind::Dfcn, 1.5, 1, 28);
        assert!(imp.validate().is_err());
        imp.imp = 0.9;
        imp.validate().unwrap();
    }
}
