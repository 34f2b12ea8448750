//! End-to-end steps composed from the stage modules, shared by the command
//! line and the acceptance suite.

use crate::classify::{
    accuracy_by_sequence, build_feature_vectors, train_classifier, SpellerResult, TrainedClassifier,
};
use crate::features::{erp_band_dynamics, extract_features, BandDynamics, BandFeatureTable, FrequencyBand};
use crate::ingest::{EventKind, EventStream, Recording, StudyConfig};
use crate::montage::{Layout, Region, RegionPair};
use crate::preprocess::{
    baseline_correct, default_filters, filter_recording, reject_artifacts, segment_epochs, EpochLabel, EpochSet, Lock,
};
use crate::stats::{paired_permutation, PermutationResult};
use crate::synth::{gen_subject, CohortSpec};
use crate::{Error, Result};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn clean_recording(rec: &Recording, cfg: &StudyConfig) -> Result<Recording> {
    Ok(filter_recording(rec, &default_filters(cfg, rec.fs))?)
}

fn layout(rec: &Recording) -> Layout {
    Layout::for_channels(&rec.channel_names)
}

/// Flash-locked epochs over `window_ms` from an already filtered recording:
/// segment, reject or repair artifacts, baseline-correct.
pub fn flash_epochs(
    filtered: &Recording,
    ev: &EventStream,
    window_ms: (f64, f64),
    cfg: &StudyConfig,
) -> Result<EpochSet> {
    let raw = segment_epochs(filtered, ev, window_ms, Lock::Flash, cfg.resting_epoch_s)?;
    let clean = reject_artifacts(
        &raw,
        cfg.artifact_threshold_uv,
        cfg.reject_channel_fraction,
        &layout(filtered),
    )?;
    Ok(baseline_correct(&clean, filtered, cfg.baseline_ms)?)
}

/// Filtered, cleaned and baseline-corrected classification epochs.
pub fn erp_epochs(rec: &Recording, ev: &EventStream, cfg: &StudyConfig) -> Result<EpochSet> {
    let filtered = clean_recording(rec, cfg)?;
    flash_epochs(&filtered, ev, cfg.epoch_window_ms, cfg)
}

/// Filtered, cleaned fixed-length resting epochs.
pub fn resting_epochs(rec: &Recording, cfg: &StudyConfig) -> Result<EpochSet> {
    let filtered = clean_recording(rec, cfg)?;
    let raw = segment_epochs(
        &filtered,
        &EventStream::default(),
        cfg.epoch_window_ms,
        Lock::RestingGrid,
        cfg.resting_epoch_s,
    )?;
    Ok(reject_artifacts(
        &raw,
        cfg.artifact_threshold_uv,
        cfg.reject_channel_fraction,
        &layout(&filtered),
    )?)
}

pub fn resting_features(rec: &Recording, cfg: &StudyConfig) -> Result<BandFeatureTable> {
    let eps = resting_epochs(rec, cfg)?;
    Ok(extract_features(&eps, &cfg.bands, &cfg.regions, cfg.spectrum_window)?)
}

/// Train on one session's epochs and score the other per sequence count.
pub fn speller_performance(
    train: &EpochSet,
    test: &EpochSet,
    cfg: &StudyConfig,
) -> Result<(TrainedClassifier, SpellerResult)> {
    let clf = train_classifier(&build_feature_vectors(train)?, cfg.svm_c)?;
    let perf = accuracy_by_sequence(
        &clf,
        &test.subject_id,
        &build_feature_vectors(test)?,
        cfg.illiteracy_threshold,
    )?;
    Ok((clf, perf))
}

/// Per-subject outputs of a cohort run, ordered by subject id.
#[derive(Debug, Clone)]
pub struct CohortStudy {
    pub features: Vec<BandFeatureTable>,
    pub performance: Vec<SpellerResult>,
    pub knobs: Vec<f64>,
}

/// Generate each subject, extract its resting features and speller
/// accuracy, and discard the raw data before the next one. Subjects run in
/// parallel; results keep subject order.
pub fn run_cohort_study(spec: &CohortSpec, cfg: &StudyConfig) -> Result<CohortStudy> {
    spec.validate()?;
    let rows: Vec<(BandFeatureTable, SpellerResult, f64)> = (0..spec.n_subjects)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let s = gen_subject(spec, i)?;
            let features = resting_features(&s.resting, cfg)?;
            let train = erp_epochs(&s.train.0, &s.train.1, cfg)?;
            let test = erp_epochs(&s.test.0, &s.test.1, cfg)?;
            let (_, perf) = speller_performance(&train, &test, cfg)?;
            Ok((features, perf, s.knob))
        })
        .collect::<Result<_>>()?;
    let mut study = CohortStudy {
        features: Vec::new(),
        performance: Vec::new(),
        knobs: Vec::new(),
    };
    for (f, p, k) in rows {
        study.features.push(f);
        study.performance.push(p);
        study.knobs.push(k);
    }
    Ok(study)
}

/// Keep every target flash and an equally large seeded random subset of
/// non-target flashes, so both conditions average the same number of epochs.
pub fn balanced_flashes(ev: &EventStream, seed: u64) -> EventStream {
    let flashes: Vec<usize> = (0..ev.events.len())
        .filter(|&i| ev.events[i].kind == EventKind::Flash)
        .collect();
    let targets: Vec<usize> = flashes.iter().copied().filter(|&i| ev.events[i].is_target).collect();
    let mut others: Vec<usize> = flashes.iter().copied().filter(|&i| !ev.events[i].is_target).collect();
    others.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    others.truncate(targets.len());
    let keep: std::collections::BTreeSet<usize> = targets.into_iter().chain(others).collect();
    EventStream::new(
        ev.events
            .iter()
            .enumerate()
            .filter(|(i, e)| e.kind == EventKind::TrialStart || keep.contains(i))
            .map(|(_, e)| e.clone())
            .collect(),
    )
}

/// Band power and synchrony time courses of one subject's session, on wide
/// segments binned over the classification window.
pub fn subject_dynamics(rec: &Recording, ev: &EventStream, cfg: &StudyConfig, seed: u64) -> Result<Vec<BandDynamics>> {
    let filtered = clean_recording(rec, cfg)?;
    let subset = balanced_flashes(ev, seed);
    let eps = flash_epochs(&filtered, &subset, cfg.dynamics_segment_ms, cfg)?;
    let target = eps.with_label(EpochLabel::Target);
    let nontarget = eps.with_label(EpochLabel::NonTarget);
    cfg.bands
        .iter()
        .map(|band| {
            Ok(erp_band_dynamics(
                &target,
                &nontarget,
                band,
                &cfg.regions,
                cfg.dynamics_bin_ms,
                Some(cfg.epoch_window_ms),
            )?)
        })
        .collect()
}

/// Where a dynamics test applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DynamicsLocus {
    Power(Region),
    Plv(RegionPair),
}

impl DynamicsLocus {
    pub fn measure(&self) -> &'static str {
        match self {
            DynamicsLocus::Power(_) => "power",
            DynamicsLocus::Plv(_) => "plv",
        }
    }

    pub fn label(&self) -> String {
        match self {
            DynamicsLocus::Power(r) => r.name().to_string(),
            DynamicsLocus::Plv(p) => p.label(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsTest {
    pub band: FrequencyBand,
    pub locus: DynamicsLocus,
    pub bins_ms: Vec<(f64, f64)>,
    pub result: PermutationResult,
}

/// Target versus non-target paired permutation test of every band, region
/// power and region-pair PLV time course across subjects.
pub fn dynamics_tests(subjects: &[Vec<BandDynamics>], cfg: &StudyConfig, seed: u64) -> Result<Vec<DynamicsTest>> {
    let Some(first) = subjects.first() else {
        return Err(Error::Feature(crate::features::FeatureError::EmptyEpochSet));
    };
    let mut out = Vec::new();
    for (b, reference) in first.iter().enumerate() {
        let per_band: Vec<&BandDynamics> = subjects
            .iter()
            .map(|s| {
                s.get(b)
                    .filter(|d| d.band == reference.band && d.bins_ms == reference.bins_ms)
                    .ok_or_else(|| {
                        crate::features::FeatureError::ShapeMismatch("subjects disagree on bands or bins".into())
                    })
            })
            .collect::<Result<_, _>>()?;
        let loci = reference
            .target
            .power
            .keys()
            .map(|&r| DynamicsLocus::Power(r))
            .chain(reference.target.plv.keys().map(|&p| DynamicsLocus::Plv(p)));
        for locus in loci {
            let series = |d: &BandDynamics, target: bool| -> Vec<f64> {
                let c = if target { &d.target } else { &d.nontarget };
                match locus {
                    DynamicsLocus::Power(r) => c.power[&r].clone(),
                    DynamicsLocus::Plv(p) => c.plv[&p].clone(),
                }
            };
            let bins = reference.bins_ms.len();
            let matrix =
                |target: bool| Array2::from_shape_fn((per_band.len(), bins), |(i, j)| series(per_band[i], target)[j]);
            let result = paired_permutation(&matrix(true), &matrix(false), cfg.alpha, cfg.n_permutations, seed)?;
            out.push(DynamicsTest {
                band: reference.band,
                locus,
                bins_ms: reference.bins_ms.clone(),
                result,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_erp_session, SynthSpec};

    #[test]
    fn balanced_subset_keeps_targets_and_trials() {
        let (_, ev) = gen_erp_session(&SynthSpec {
            n_trials: 2,
            ..SynthSpec::default()
        })
        .unwrap();
        let sub = balanced_flashes(&ev, 1);
        assert_eq!(sub.n_trials(), 2);
        let t = sub.events.iter().filter(|e| e.is_target).count();
        assert_eq!(t, 40);
        assert_eq!(sub.flash_count(), 80);
        assert_eq!(balanced_flashes(&ev, 1), sub);
        assert!(sub.events.windows(2).all(|w| w[0].sample_index < w[1].sample_index));
    }

    #[test]
    fn erp_epochs_have_classifier_shape() {
        let spec = SynthSpec {
            n_trials: 1,
            ..SynthSpec::default()
        };
        let (rec, ev) = gen_erp_session(&spec).unwrap();
        let eps = erp_epochs(&rec, &ev, &StudyConfig::default()).unwrap();
        assert_eq!(eps.len(), 120);
        assert_eq!(eps.n_samples(), 80);
        assert_eq!(build_feature_vectors(&eps).unwrap()[0].values.len(), 512);
    }
}
