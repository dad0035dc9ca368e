//! ROC/AUC, DeLong's test for correlated AUCs, and the per-input-count and
//! subset reports built on them.

mod delong;
mod report;
mod roc;
mod scores;

pub use delong::{delong_test, DeLongComparison};
pub use report::{
    evaluate_per_n, evaluate_subset, significance_matrix, EvalReport, PairwiseTest, PerNCurve, PerNEntry, SubsetRow,
    SIGNIFICANCE_LEVEL,
};
pub use roc::{roc_auc, RocResult};
pub use scores::ScoreTable;
