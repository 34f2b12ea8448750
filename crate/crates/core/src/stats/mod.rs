//! Correlation with exact p values, cross-validated regression and paired
//! permutation tests.

mod correlation;
mod permutation;
mod regression;
mod report;
pub mod special;

pub use correlation::{correlate_features, p_from_r, pearson, CorrelationResult, CorrelationTable};
pub use permutation::{paired_permutation, PermutationResult, EXHAUSTIVE_MAX_SUBJECTS};
pub use regression::{fit_predictor, RegressionModel};
pub use report::{write_pair_table, write_permutation_masks, write_region_table, write_regression_summary, MaskRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("need at least 3 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("correlation {0} outside [-1, 1]")]
    InvalidCorrelation(f64),
    #[error("subject mismatch: {0}")]
    SubjectMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}
