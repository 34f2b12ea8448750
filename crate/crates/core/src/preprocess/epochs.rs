use super::PreprocessError;
use crate::ingest::{Condition, EventStream, Recording};
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochLabel {
    Target,
    NonTarget,
    Resting,
}

impl EpochLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EpochLabel::Target => "target",
            EpochLabel::NonTarget => "non_target",
            EpochLabel::Resting => "resting",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "target" => Some(EpochLabel::Target),
            "non_target" => Some(EpochLabel::NonTarget),
            "resting" => Some(EpochLabel::Resting),
            _ => None,
        }
    }
}

/// What epochs are time-locked to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lock {
    Flash,
    /// Consecutive non-overlapping pseudo-trials tiling a resting recording.
    RestingGrid,
}

/// One segment, channels x samples in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub data: Array2<f64>,
    /// Time of the first sample relative to the lock event.
    pub t0_ms: f64,
    pub label: EpochLabel,
    pub sequence_index: Option<usize>,
    pub stimulus_group: Option<u8>,
    pub trial_id: Option<usize>,
    /// Sample index of the lock event in the source recording.
    pub onset_sample: usize,
    pub object_ids: Vec<u8>,
}

/// A channel replaced by the weighted mean of clean neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub epoch: usize,
    pub channel: String,
    /// `(channel index, weight)`; weights sum to one.
    pub neighbors: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub subject_id: String,
    pub fs: f64,
    pub channel_names: Vec<String>,
    pub epochs: Vec<Epoch>,
    pub rejected_count: usize,
    pub interpolated: Vec<Interpolation>,
}

impl EpochSet {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.epochs.first().map_or(0, |e| e.data.ncols())
    }

    pub fn t0_ms(&self) -> f64 {
        self.epochs.first().map_or(0.0, |e| e.t0_ms)
    }

    /// Same metadata, keeping only epochs with the given label.
    pub fn with_label(&self, label: EpochLabel) -> EpochSet {
        EpochSet {
            epochs: self.epochs.iter().filter(|e| e.label == label).cloned().collect(),
            interpolated: Vec::new(),
            rejected_count: 0,
            ..self.clone_meta()
        }
    }

    pub(crate) fn clone_meta(&self) -> EpochSet {
        EpochSet {
            subject_id: self.subject_id.clone(),
            fs: self.fs,
            channel_names: self.channel_names.clone(),
            epochs: Vec::new(),
            rejected_count: self.rejected_count,
            interpolated: Vec::new(),
        }
    }
}

/// Convert a millisecond offset to samples, requiring an exact integer.
pub(crate) fn ms_to_samples(ms: f64, fs: f64) -> Result<i64, PreprocessError> {
    let x = ms * fs / 1000.0;
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(PreprocessError::InvalidWindow(format!(
            "{ms} ms is not a whole number of samples at {fs} Hz"
        )));
    }
    Ok(r as i64)
}

/// Cut epochs out of a recording.
///
/// Flash-locked mode yields one epoch per flash labelled by `is_target`;
/// resting-grid mode tiles a resting recording into consecutive
/// `resting_epoch_s` segments and ignores `ev` and `window_ms`.
pub fn segment_epochs(
    rec: &Recording,
    ev: &EventStream,
    window_ms: (f64, f64),
    lock: Lock,
    resting_epoch_s: f64,
) -> Result<EpochSet, PreprocessError> {
    let len = rec.n_samples();
    if len == 0 {
        return Err(PreprocessError::EmptyRecording);
    }
    let mut set = EpochSet {
        subject_id: rec.subject_id.clone(),
        fs: rec.fs,
        channel_names: rec.channel_names.clone(),
        epochs: Vec::new(),
        rejected_count: 0,
        interpolated: Vec::new(),
    };
    match lock {
        Lock::Flash => {
            if window_ms.0 >= window_ms.1 {
                return Err(PreprocessError::InvalidWindow("window must be increasing".into()));
            }
            let start = ms_to_samples(window_ms.0, rec.fs)?;
            let end = ms_to_samples(window_ms.1, rec.fs)?;
            for pos in ev.flash_positions_lenient()? {
                let flash = &ev.events[pos.event];
                let onset = flash.sample_index as i64;
                let (a, b) = (onset + start, onset + end);
                if a < 0 || b > len as i64 {
                    return Err(PreprocessError::WindowOutOfBounds { start: a, end: b, len });
                }
                set.epochs.push(Epoch {
                    data: rec.data.slice(s![.., a as usize..b as usize]).to_owned(),
                    t0_ms: window_ms.0,
                    label: if flash.is_target {
                        EpochLabel::Target
                    } else {
                        EpochLabel::NonTarget
                    },
                    sequence_index: Some(pos.sequence_index),
                    stimulus_group: flash.stimulus_group,
                    trial_id: Some(pos.trial_id),
                    onset_sample: flash.sample_index,
                    object_ids: flash.object_ids.clone(),
                });
            }
        }
        Lock::RestingGrid => {
            if rec.condition != Condition::Resting {
                return Err(PreprocessError::WrongCondition);
            }
            let n = ms_to_samples(resting_epoch_s * 1000.0, rec.fs)?;
            if n <= 0 {
                return Err(PreprocessError::InvalidWindow("resting epoch must be positive".into()));
            }
            let n = n as usize;
            let count = len / n;
            if count == 0 {
                return Err(PreprocessError::EmptyRecording);
            }
            for k in 0..count {
                set.epochs.push(Epoch {
                    data: rec.data.slice(s![.., k * n..(k + 1) * n]).to_owned(),
                    t0_ms: 0.0,
                    label: EpochLabel::Resting,
                    sequence_index: None,
                    stimulus_group: None,
                    trial_id: None,
                    onset_sample: k * n,
                    object_ids: Vec::new(),
                });
            }
        }
    }
    Ok(set)
}

/// Subtract, per epoch and channel, the mean of the recording over
/// `baseline_ms` relative to the epoch's lock event. Interpolated channels use
/// the same neighbor weights on the baseline segment.
pub fn baseline_correct(eps: &EpochSet, rec: &Recording, baseline_ms: (f64, f64)) -> Result<EpochSet, PreprocessError> {
    let start = ms_to_samples(baseline_ms.0, rec.fs)?;
    let end = ms_to_samples(baseline_ms.1, rec.fs)?;
    if start >= end {
        return Err(PreprocessError::InvalidWindow(
            "baseline window must be increasing".into(),
        ));
    }
    let len = rec.n_samples();
    let mut out = eps.clone();
    for (idx, epoch) in out.epochs.iter_mut().enumerate() {
        let onset = epoch.onset_sample as i64;
        let (a, b) = (onset + start, onset + end);
        if a < 0 || b > len as i64 {
            return Err(PreprocessError::BaselineOutOfBounds { start: a, end: b, len });
        }
        let window = rec.data.slice(s![.., a as usize..b as usize]);
        let mut means: Vec<f64> = window
            .outer_iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        let raw = means.clone();
        for interp in eps.interpolated.iter().filter(|i| i.epoch == idx) {
            if let Some(ch) = eps.channel_names.iter().position(|c| *c == interp.channel) {
                means[ch] = interp.neighbors.iter().map(|&(n, w)| w * raw[n]).sum();
            }
        }
        for (mut row, m) in epoch.data.outer_iter_mut().zip(&means) {
            row.mapv_inplace(|v| v - m);
        }
    }
    Ok(out)
}
