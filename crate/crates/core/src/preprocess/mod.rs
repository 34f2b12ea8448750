//! Filtering, epoching, baseline correction and amplitude-based artifact
//! handling.

mod artifacts;
mod epochs;
pub mod filter;
mod io;

pub use artifacts::reject_artifacts;
pub use epochs::{baseline_correct, segment_epochs, Epoch, EpochLabel, EpochSet, Interpolation, Lock};
pub use filter::{Biquad, Cascade, FilterKind, FilterSpec};
pub use io::{read_epochs, write_epochs};

use crate::ingest::Recording;
use rayon::prelude::*;
use thiserror::Error;

/// Reflection padding applied before forward-backward filtering, in seconds.
pub const PAD_SECONDS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("filter edge {edge} Hz at or above Nyquist {nyquist} Hz")]
    EdgeAboveNyquist { edge: f64, nyquist: f64 },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("recording of {len} samples is shorter than 3x filter settling ({needed} samples)")]
    RecordingTooShortForFilter { len: usize, needed: usize },
    #[error("epoch window [{start}, {end}) outside recording of {len} samples")]
    WindowOutOfBounds { start: i64, end: i64, len: usize },
    #[error("recording too short for a single epoch")]
    EmptyRecording,
    #[error("baseline window [{start}, {end}) outside recording of {len} samples")]
    BaselineOutOfBounds { start: i64, end: i64, len: usize },
    #[error("no clean neighbor to interpolate channel {channel} in epoch {epoch}")]
    AllChannelsBad { epoch: usize, channel: String },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("resting-grid epoching requires a resting recording")]
    WrongCondition,
    #[error("artifact threshold must be positive")]
    InvalidThreshold,
    #[error("events: {0}")]
    Events(#[from] crate::ingest::IngestError),
    #[error("{path}: {reason}")]
    EpochFile { path: String, reason: String },
}

/// Reflection pad length in samples for a sampling rate.
pub fn pad_samples(fs: f64) -> usize {
    (PAD_SECONDS * fs).round() as usize
}

/// Apply `specs` in order to every channel. Zero-phase specs run
/// forward-backward after 1 s odd-reflection padding; others run causally.
pub fn filter_recording(rec: &Recording, specs: &[FilterSpec]) -> Result<Recording, PreprocessError> {
    let designs = specs
        .iter()
        .map(|s| s.design(rec.fs).map(|c| (c, s.zero_phase)))
        .collect::<Result<Vec<_>, _>>()?;
    let len = rec.n_samples();
    for (c, _) in &designs {
        let needed = 3 * c.settling_samples(rec.fs);
        if len < needed {
            return Err(PreprocessError::RecordingTooShortForFilter { len, needed });
        }
    }
    let pad = pad_samples(rec.fs);
    let rows: Vec<Vec<f64>> = rec
        .data
        .outer_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|row| {
            let mut x = row.to_vec();
            for (c, zero_phase) in &designs {
                if *zero_phase {
                    x = c.filtfilt(&x, pad);
                } else {
                    c.filter(&mut x);
                }
            }
            x
        })
        .collect();
    let mut out = rec.clone();
    for (mut dst, src) in out.data.outer_iter_mut().zip(rows) {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    }
    Ok(out)
}

/// The default cleaning chain: band-pass plus a notch when the notch lies
/// below Nyquist.
pub fn default_filters(cfg: &crate::ingest::StudyConfig, fs: f64) -> Vec<FilterSpec> {
    let mut specs = vec![FilterSpec::bandpass(cfg.bandpass_hz.0, cfg.bandpass_hz.1).with_order(cfg.filter_order)];
    if let Some(f0) = cfg.notch_hz {
        if f0 < fs / 2.0 {
            let mut n = FilterSpec::notch(f0);
            n.q = cfg.notch_q;
            specs.push(n);
        }
    }
    specs
}
