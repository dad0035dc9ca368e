//! Denoising fully connected networks (DFCN) for tabular classification
//! with missing inputs, the ablation baselines (FCN, DAE, SDAE, random
//! forest) and the masking-based evaluation protocol used to compare them.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] loads and normalizes tabular records and encodes missingness.
//! * [`masking`] applies training-time input masking and builds the
//!   heavily masked evaluation sets.
//! * [`nn`] is a small dense-network engine with a classification head and a
//!   reconstruction head sharing one encoder.
//! * [`models`] holds the five training procedures and IMP model selection.
//! * [`eval`] computes ROC/AUC, DeLong's test and the per-input-count reports.
//!
//! Data-parallel loops go through [`exec::Execution`], which uses rayon when
//! the `parallel` feature is enabled and falls back to plain iteration
//! otherwise.

pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod masking;
pub mod models;
pub mod nn;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
