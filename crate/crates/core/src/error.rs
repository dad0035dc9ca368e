use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    MalformedCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: label `{value}` is not 0 or 1")]
    NonBinaryLabel { row: usize, value: String },

    #[error("unknown columns in header: {0:?}")]
    UnknownColumns(Vec<String>),

    #[error("columns missing from header: {0:?}")]
    MissingColumns(Vec<String>),

    #[error("feature `{feature}` has zero variance over its observed values")]
    ZeroVariance { feature: String },

    #[error("feature `{feature}` has {observed} observed values, need at least 2")]
    TooFewObservations { feature: String, observed: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("stratum {stratum} has {available} records, {requested} requested")]
    InsufficientStratum {
        stratum: String,
        available: usize,
        requested: usize,
    },

    #[error("operation produced an empty dataset: {0}")]
    EmptyResult(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {required} samples of each class, got {positives} positive and {negatives} negative")]
    SingleClass {
        positives: usize,
        negatives: usize,
        required: usize,
    },

    #[error("invalid score at index {index}: {value}")]
    InvalidScore { index: usize, value: f64 },

    #[error("DeLong variance is zero while AUCs differ ({auc_a} vs {auc_b})")]
    DegenerateVariance { auc_a: f64, auc_b: f64 },

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("gradient check failed at {tensor}[{index}]: analytic {analytic}, numeric {numeric}, relative error {relative_error:e}")]
    GradientMismatch {
        tensor: String,
        index: usize,
        analytic: f64,
        numeric: f64,
        relative_error: f64,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a short description of what was being done.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
