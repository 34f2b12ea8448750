//! Resting-state spectral and phase-synchrony features, aggregated over
//! scalp regions, plus band dynamics around flashes.

mod band;
mod dynamics;
mod phase;
mod plv;
mod spectrum;
mod table;

pub use band::{BandName, FrequencyBand};
pub use dynamics::{average_dynamics, erp_band_dynamics, BandDynamics, ConditionDynamics};
pub use phase::{analytic_epochs, analytic_signal, instantaneous_phase, AnalyticEpochs, PhaseEpochs, EDGE_FRACTION};
pub use plv::{plv, plv_time_course, region_pair_plv};
pub use spectrum::{band_psd, compute_spectrum, region_band_power, Spectrum};
pub use table::{
    extract_features, read_feature_tables, write_feature_tables, BandFeatureTable, FeatureId, FeatureKind, FeatureLocus,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("epoch set is empty")]
    EmptyEpochSet,
    #[error("band {0} lies outside the spectrum")]
    BandOutsideSpectrum(FrequencyBand),
    #[error("missing electrode: {0}")]
    MissingElectrode(String),
    #[error("epochs of {seconds:.3} s hold fewer than 3 cycles of {band} (need {needed:.3} s)")]
    EpochTooShortForBand {
        band: FrequencyBand,
        seconds: f64,
        needed: f64,
    },
    #[error("phase locking needs at least 2 epochs, got {0}")]
    TooFewEpochs(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("channel index {index} out of range for {len} channels")]
    ChannelOutOfRange { index: usize, len: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Table { path: String, reason: String },
}
