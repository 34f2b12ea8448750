//! ERP feature vectors, the linear target/non-target classifier and speller
//! decoding.

mod speller;
mod svm;

pub use speller::{
    accuracy_by_sequence, accuracy_from_scores, decode_from_scores, decode_target, read_speller_results, true_target,
    write_speller_results, SpellerResult,
};
pub use svm::{train_classifier, TrainedClassifier};

use crate::ingest::SEQUENCES_PER_TRIAL;
use crate::preprocess::{EpochLabel, EpochSet};
use thiserror::Error;

/// Non-overlapping averaging windows per channel.
pub const N_WINDOWS: usize = 16;
/// Width of each averaging window.
pub const WINDOW_MS: f64 = 50.0;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("epochs of {got} samples starting at {t0_ms} ms; expected {expected} samples from 0 ms")]
    WrongEpochLength { expected: usize, got: usize, t0_ms: f64 },
    #[error("training data holds a single class")]
    SingleClass,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("feature vectors have {got} values, classifier expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trial {trial} has {have} sequences, {need} requested")]
    MissingSequences { trial: usize, have: usize, need: usize },
    #[error("sequence count must be in 1..={max}, got {got}")]
    InvalidSequenceCount { got: usize, max: usize },
    #[error("no test trials")]
    NoTrials,
    #[error("trial {0} has no unique target object")]
    AmbiguousTarget(usize),
    #[error("regularization must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("{0} scores for {1} vectors")]
    ScoreCount(usize, usize),
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}

/// Window means of one flash epoch, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub is_target: bool,
    pub trial_id: usize,
    pub sequence_index: usize,
    pub stimulus_group: u8,
    pub object_ids: Vec<u8>,
}

/// Average each channel over 16 consecutive 50 ms windows starting at the
/// flash. Epochs must start at 0 ms and hold exactly those 16 windows.
pub fn build_feature_vectors(eps: &EpochSet) -> Result<Vec<FeatureVector>, ClassifyError> {
    let w = (WINDOW_MS * eps.fs / 1000.0).round() as usize;
    let expected = w * N_WINDOWS;
    eps.epochs
        .iter()
        .map(|e| {
            if w == 0 || e.data.ncols() != expected || e.t0_ms != 0.0 {
                return Err(ClassifyError::WrongEpochLength {
                    expected,
                    got: e.data.ncols(),
                    t0_ms: e.t0_ms,
                });
            }
            let mut values = Vec::with_capacity(e.data.nrows() * N_WINDOWS);
            for row in e.data.outer_iter() {
                for k in 0..N_WINDOWS {
                    values.push(row.slice(ndarray::s![k * w..(k + 1) * w]).sum() / w as f64);
                }
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ClassifyError::NonFinite);
            }
            Ok(FeatureVector {
                values,
                is_target: e.label == EpochLabel::Target,
                trial_id: e.trial_id.unwrap_or(0),
                sequence_index: e.sequence_index.unwrap_or(1),
                stimulus_group: e.stimulus_group.unwrap_or(0),
                object_ids: e.object_ids.clone(),
            })
        })
        .collect()
}

pub(crate) fn check_sequences(s: usize) -> Result<(), ClassifyError> {
    if s == 0 || s > SEQUENCES_PER_TRIAL {
        return Err(ClassifyError::InvalidSequenceCount {
            got: s,
            max: SEQUENCES_PER_TRIAL,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Epoch;
    use ndarray::Array2;

    pub(crate) fn epoch_set(datas: Vec<Array2<f64>>) -> EpochSet {
        let n_ch = datas.first().map_or(32, |d| d.nrows());
        EpochSet {
            subject_id: "S".into(),
            fs: 100.0,
            channel_names: (0..n_ch).map(|c| format!("E{c}")).collect(),
            epochs: datas
                .into_iter()
                .enumerate()
                .map(|(i, data)| Epoch {
                    data,
                    t0_ms: 0.0,
                    label: if i % 6 == 0 {
                        EpochLabel::Target
                    } else {
                        EpochLabel::NonTarget
                    },
                    sequence_index: Some(i / 12 + 1),
                    stimulus_group: Some((i % 12) as u8),
                    trial_id: Some(0),
                    onset_sample: i * 18,
                    object_ids: vec![],
                })
                .collect(),
            rejected_count: 0,
            interpolated: vec![],
        }
    }

    #[test]
    fn constant_epoch() {
        let set = epoch_set(vec![Array2::from_elem((32, 80), 3.0)]);
        let v = build_feature_vectors(&set).unwrap();
        assert_eq!(v[0].values.len(), 512);
        assert!(v[0].values.iter().all(|&x| x == 3.0));
    }

    #[test]
    fn ramp_window_means() {
        let mut d = Array2::zeros((32, 80));
        for t in 0..80 {
            d[[0, t]] = t as f64;
        }
        let v = build_feature_vectors(&epoch_set(vec![d])).unwrap();
        let expect: Vec<f64> = (0..16).map(|k| (5 * k + 2) as f64).collect();
        assert_eq!(&v[0].values[..16], expect.as_slice());
        assert!(v[0].values[16..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_vector_per_epoch_with_labels() {
        let set = epoch_set((0..120).map(|_| Array2::zeros((32, 80))).collect());
        let v = build_feature_vectors(&set).unwrap();
        assert_eq!(v.len(), 120);
        for (fv, e) in v.iter().zip(&set.epochs) {
            assert_eq!(fv.is_target, e.label == EpochLabel::Target);
            assert_eq!(Some(fv.sequence_index), e.sequence_index);
        }
        assert_eq!(v.iter().filter(|f| f.is_target).count(), 20);
    }

    #[test]
    fn wrong_length() {
        let set = epoch_set(vec![Array2::zeros((32, 70))]);
        assert!(matches!(
            build_feature_vectors(&set),
            Err(ClassifyError::WrongEpochLength { .. })
        ));
    }
}
