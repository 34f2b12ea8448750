use super::signal::{analytic_carrier, kappa_for_resultant, von_mises_quantiles};
use super::{SynthError, SynthSpec};
use crate::features::{BandName, FrequencyBand};
use crate::ingest::{
    Condition, Event, EventStream, Recording, FLASHES_PER_SEQUENCE, FLASH_MS, ISI_MS, N_OBJECTS, SEQUENCES_PER_TRIAL,
};
use crate::montage::{electrode_position, montage_labels, Region, RegionMap};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use std::collections::BTreeMap;

/// Quiet time before the first flash of a trial.
pub const TRIAL_LEAD_S: f64 = 1.5;
/// Quiet time after the last flash of a trial.
pub const TRIAL_TAIL_S: f64 = 2.5;
/// Spatial spread of the P300 around the central midline sites.
const P300_SPREAD: f64 = 0.2;
/// Margin between a band edge and its carrier's spectral support, Hz, so
/// that neighbouring bands barely leak through a band-pass at the edges.
const BAND_GUARD_HZ: f64 = 0.5;

const RESTING_STREAM: u64 = 1;
const SESSION_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Objects lit by a stimulus group: groups 0-5 are rows, 6-11 columns of
/// the 6 x 6 matrix.
pub fn group_objects(group: u8) -> Vec<u8> {
    let g = group as usize;
    let side = (N_OBJECTS as f64).sqrt() as usize;
    if g < side {
        (0..side).map(|c| (g * side + c) as u8).collect()
    } else {
        (0..side).map(|r| (r * side + g - side) as u8).collect()
    }
}

fn carrier(rng: &mut ChaCha8Rng, spec: &SynthSpec, band: FrequencyBand, n: usize, amp: f64) -> Vec<Complex64> {
    analytic_carrier(rng, n, spec.fs, band.f1 + BAND_GUARD_HZ, band.f2 - BAND_GUARD_HZ, amp)
}

/// Region carriers for one band. A coupled follower is its leader rotated by
/// a phase offset held for each block; offsets are von Mises quantiles in
/// shuffled order. Zero coupling leaves the regions independent.
fn band_carriers(
    spec: &SynthSpec,
    rng: &mut ChaCha8Rng,
    band: FrequencyBand,
    n: usize,
) -> BTreeMap<Region, Vec<Complex64>> {
    let mut out = BTreeMap::new();
    for region in Region::ALL {
        let amp = spec.amplitude(region, band.name);
        out.insert(region, carrier(rng, spec, band, n, amp));
    }
    let block = ((spec.jitter_block_s * spec.fs).round() as usize).max(1);
    for c in spec.coupling.iter().filter(|c| c.band == band.name && c.plv > 0.0) {
        let ratio = spec.amplitude(c.follower, band.name) / spec.amplitude(c.leader, band.name);
        let mut offsets = von_mises_quantiles(kappa_for_resultant(c.plv), n.div_ceil(block));
        offsets.shuffle(rng);
        let leader = out[&c.leader].clone();
        let follower: Vec<Complex64> = leader
            .chunks(block)
            .zip(offsets)
            .flat_map(|(chunk, theta)| {
                let rot = Complex64::from_polar(ratio, theta);
                chunk.iter().map(move |z| z * rot)
            })
            .collect();
        out.insert(c.follower, follower);
    }
    out
}

/// Eyes-closed resting recording on the 32-channel montage.
pub fn gen_resting(spec: &SynthSpec) -> Result<Recording, SynthError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, RESTING_STREAM);
    let n = (spec.duration_s * spec.fs).round() as usize;
    let labels = montage_labels();
    let regions = RegionMap::default();
    let mut data = Array2::<f64>::zeros((labels.len(), n));
    let shared = spec.spatial_coherence.sqrt();
    let private = (1.0 - spec.spatial_coherence).sqrt();
    for name in BandName::ALL {
        let band = FrequencyBand::canonical(name);
        if band.f2 >= spec.fs / 2.0 {
            continue;
        }
        let carriers = band_carriers(spec, &mut rng, band, n);
        for (ch, label) in labels.iter().enumerate() {
            let Some(region) = regions.region_of(label) else {
                continue;
            };
            let common = &carriers[&region];
            let own = if private > 0.0 {
                carrier(&mut rng, spec, band, n, spec.amplitude(region, name))
            } else {
                Vec::new()
            };
            let mut row = data.row_mut(ch);
            for (t, v) in row.iter_mut().enumerate() {
                *v += shared * common[t].re + own.get(t).map_or(0.0, |z| private * z.re);
            }
        }
    }
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).expect("finite sd");
        data.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    Ok(Recording::new(
        spec.subject_id.clone(),
        Condition::Resting,
        spec.fs,
        labels,
        data,
    )?)
}

/// P300 weight of each channel: 1 at Cz or CPz, Gaussian in scalp distance.
fn p300_weights(labels: &[String]) -> Vec<f64> {
    let anchors: Vec<(f64, f64)> = ["Cz", "CPz"].iter().filter_map(|l| electrode_position(l)).collect();
    labels
        .iter()
        .map(|l| {
            electrode_position(l).map_or(0.0, |(x, y)| {
                let d2 = anchors
                    .iter()
                    .map(|(ax, ay)| (x - ax).powi(2) + (y - ay).powi(2))
                    .fold(f64::INFINITY, f64::min);
                (-d2 / (2.0 * P300_SPREAD * P300_SPREAD)).exp()
            })
        })
        .collect()
}

/// Speller session: each trial is a trial marker, a quiet lead, ten
/// sequences of the twelve groups in shuffled order at the flash onset
/// asynchrony, and a quiet tail. Flashes containing the trial's target carry
/// a Gaussian P300 on top of white background noise.
pub fn gen_erp_session(spec: &SynthSpec) -> Result<(Recording, EventStream), SynthError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, SESSION_STREAM);
    let fs = spec.fs;
    let soa = (FLASH_MS + ISI_MS) / 1000.0 * fs;
    let n_flashes = SEQUENCES_PER_TRIAL * FLASHES_PER_SEQUENCE;
    let lead = (TRIAL_LEAD_S * fs).round() as usize;
    let tail = (TRIAL_TAIL_S * fs).round() as usize;
    let trial_len = lead + ((n_flashes - 1) as f64 * soa).round() as usize + tail;
    let total = trial_len * spec.n_trials;

    let mut events = Vec::with_capacity(spec.n_trials * (n_flashes + 1));
    let mut target_onsets = Vec::new();
    for trial in 0..spec.n_trials {
        let start = trial * trial_len;
        let target = spec
            .target_object
            .unwrap_or_else(|| rng.random_range(0..N_OBJECTS as u8));
        events.push(Event::trial_start(start));
        let mut k = 0;
        for _ in 0..SEQUENCES_PER_TRIAL {
            let mut order: Vec<u8> = (0..FLASHES_PER_SEQUENCE as u8).collect();
            order.shuffle(&mut rng);
            for g in order {
                let onset = start + lead + (k as f64 * soa).round() as usize;
                let objects = group_objects(g);
                let hit = objects.contains(&target);
                if hit {
                    target_onsets.push(onset);
                }
                events.push(Event::flash(onset, g, objects, hit));
                k += 1;
            }
        }
    }

    let labels = montage_labels();
    let mut data = Array2::<f64>::zeros((labels.len(), total));
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).expect("finite sd");
        data.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    let e = spec.erp;
    if e.p300_amplitude > 0.0 {
        let sd = e.width_ms / 2.0;
        let reach = ((e.latency_ms + 2.0 * sd) / 1000.0 * fs).ceil() as usize;
        let wave: Vec<f64> = (0..=reach)
            .map(|i| {
                let t = i as f64 * 1000.0 / fs;
                e.p300_amplitude * (-(t - e.latency_ms).powi(2) / (2.0 * sd * sd)).exp()
            })
            .collect();
        for (ch, w) in p300_weights(&labels).into_iter().enumerate() {
            let mut row = data.row_mut(ch);
            for &onset in &target_onsets {
                for (i, v) in wave.iter().enumerate() {
                    if let Some(x) = row.get_mut(onset + i) {
                        *x += w * v;
                    }
                }
            }
        }
    }
    let rec = Recording::new(spec.subject_id.clone(), Condition::ErpTask, fs, labels, data)?;
    Ok((rec, EventStream::new(events)))
}
