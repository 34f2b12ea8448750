use super::{FeatureError, PhaseEpochs};
use crate::montage::{region_slot, RegionMap, RegionPair};
use rayon::prelude::*;
use std::collections::BTreeMap;

fn check(ph: &PhaseEpochs, i: usize, j: usize) -> Result<(), FeatureError> {
    let len = ph.n_channels();
    for index in [i, j] {
        if index >= len {
            return Err(FeatureError::ChannelOutOfRange { index, len });
        }
    }
    if ph.n_epochs() < 2 {
        return Err(FeatureError::TooFewEpochs(ph.n_epochs()));
    }
    Ok(())
}

/// Unit phasors (cos, sin) for a channel, epochs x samples flattened.
struct Phasors {
    re: Vec<f64>,
    im: Vec<f64>,
}

fn phasors(ph: &PhaseEpochs, ch: usize) -> Phasors {
    let view = ph.phase.index_axis(ndarray::Axis(0), ch);
    Phasors {
        re: view.iter().map(|p| p.cos()).collect(),
        im: view.iter().map(|p| p.sin()).collect(),
    }
}

/// Across-epoch locking at each sample of `range`, from precomputed phasors.
///
/// The product `a * conj(b)` is summed term by term so that swapping the
/// channels only conjugates the sum and the modulus is bit-identical.
fn course(a: &Phasors, b: &Phasors, n_ep: usize, n_t: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    range
        .map(|t| {
            let (mut re, mut im) = (0.0, 0.0);
            for e in 0..n_ep {
                let k = e * n_t + t;
                re += a.re[k] * b.re[k] + a.im[k] * b.im[k];
                im += a.im[k] * b.re[k] - a.re[k] * b.im[k];
            }
            (re * re + im * im).sqrt() / n_ep as f64
        })
        .collect()
}

/// Phase-locking value of channels `i` and `j` at every sample, across epochs.
pub fn plv_time_course(ph: &PhaseEpochs, i: usize, j: usize) -> Result<Vec<f64>, FeatureError> {
    check(ph, i, j)?;
    let (a, b) = (phasors(ph, i), phasors(ph, j));
    Ok(course(&a, &b, ph.n_epochs(), ph.n_samples(), 0..ph.n_samples()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Across-epoch phase-locking value averaged over the interior samples.
pub fn plv(ph: &PhaseEpochs, i: usize, j: usize) -> Result<f64, FeatureError> {
    check(ph, i, j)?;
    let (a, b) = (phasors(ph, i), phasors(ph, j));
    Ok(mean(&course(&a, &b, ph.n_epochs(), ph.n_samples(), ph.interior.clone())).min(1.0))
}

/// Electrode pairs behind a region pair: all cross pairs between two regions,
/// or all distinct unordered pairs within one.
pub(crate) fn electrode_pairs(pair: RegionPair, idx: &[Vec<usize>; 4]) -> Vec<(usize, usize)> {
    let a = &idx[region_slot(pair.first())];
    let b = &idx[region_slot(pair.second())];
    if pair.is_within() {
        let mut out = Vec::new();
        for (k, &x) in a.iter().enumerate() {
            for &y in &a[k + 1..] {
                out.push((x, y));
            }
        }
        out
    } else {
        a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
    }
}

/// Mean electrode-pair locking for each of the ten region pairs.
pub fn region_pair_plv(ph: &PhaseEpochs, regions: &RegionMap) -> Result<BTreeMap<RegionPair, f64>, FeatureError> {
    let idx = regions
        .indices(&ph.channel_names)
        .map_err(FeatureError::MissingElectrode)?;
    if ph.n_epochs() < 2 {
        return Err(FeatureError::TooFewEpochs(ph.n_epochs()));
    }
    let channels: Vec<usize> = idx.iter().flatten().copied().collect();
    let cache: BTreeMap<usize, Phasors> = channels
        .par_iter()
        .map(|&c| (c, phasors(ph, c)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let (n_ep, n_t) = (ph.n_epochs(), ph.n_samples());
    RegionPair::all()
        .into_iter()
        .map(|pair| {
            let values: Vec<f64> = electrode_pairs(pair, &idx)
                .par_iter()
                .map(|&(x, y)| mean(&course(&cache[&x], &cache[&y], n_ep, n_t, ph.interior.clone())))
                .collect();
            Ok((pair, mean(&values).min(1.0)))
        })
        .collect()
}
