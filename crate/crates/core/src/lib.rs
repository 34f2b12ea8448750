//! EEG pipeline relating resting-state spectral and phase-synchrony features
//! to P300 speller performance.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod features;
pub mod ingest;
pub mod montage;
pub mod pipeline;
pub mod preprocess;
pub mod stats;
pub mod synth;

use thiserror::Error;

/// Any pipeline failure, split into bad input and numerical breakdown.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Classify(#[from] classify::ClassifyError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
}

impl Error {
    /// True when the computation itself failed on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        use classify::ClassifyError as C;
        use stats::StatsError as S;
        matches!(
            self,
            Error::Classify(C::NonFinite) | Error::Stats(S::ConstantInput | S::InvalidCorrelation(_) | S::NonFinite)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
