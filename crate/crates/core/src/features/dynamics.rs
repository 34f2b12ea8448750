use super::plv::electrode_pairs;
use super::{analytic_epochs, AnalyticEpochs, FeatureError, FrequencyBand};
use crate::montage::{region_slot, Region, RegionMap, RegionPair};
use crate::preprocess::EpochSet;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Binned time courses for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionDynamics {
    /// Squared analytic amplitude, µV², per region and bin.
    pub power: BTreeMap<Region, Vec<f64>>,
    /// Across-epoch phase locking per region pair and bin.
    pub plv: BTreeMap<RegionPair, Vec<f64>>,
    pub n_epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandDynamics {
    pub band: FrequencyBand,
    /// `(start, end)` of each bin in ms relative to the flash.
    pub bins_ms: Vec<(f64, f64)>,
    pub target: ConditionDynamics,
    pub nontarget: ConditionDynamics,
}

fn bin_ranges(
    a: &AnalyticEpochs,
    n_samples: usize,
    bins_ms: &[(f64, f64)],
) -> Result<Vec<std::ops::Range<usize>>, FeatureError> {
    bins_ms
        .iter()
        .map(|&(s, e)| {
            let at = |ms: f64| ((ms - a.t0_ms) * a.fs / 1000.0).round();
            let (lo, hi) = (at(s), at(e));
            if lo < 0.0 || hi > n_samples as f64 || hi <= lo {
                return Err(FeatureError::ShapeMismatch(format!(
                    "bin {s}-{e} ms outside epochs starting at {} ms",
                    a.t0_ms
                )));
            }
            Ok(lo as usize..hi as usize)
        })
        .collect()
}

fn condition(
    eps: &EpochSet,
    band: &FrequencyBand,
    idx: &[Vec<usize>; 4],
    bins_ms: &[(f64, f64)],
) -> Result<ConditionDynamics, FeatureError> {
    let a = analytic_epochs(eps, band)?;
    let (n_ch, n_ep, n_t) = a.values.dim();
    let ranges = bin_ranges(&a, n_t, bins_ms)?;

    // epoch-mean power per channel and sample
    let mut pow = vec![0.0; n_ch * n_t];
    for c in 0..n_ch {
        for e in 0..n_ep {
            for t in 0..n_t {
                pow[c * n_t + t] += a.values[[c, e, t]].norm_sqr();
            }
        }
    }
    pow.iter_mut().for_each(|p| *p /= n_ep as f64);

    let binned = |series: &dyn Fn(usize) -> f64| -> Vec<f64> {
        ranges
            .iter()
            .map(|r| r.clone().map(series).sum::<f64>() / r.len() as f64)
            .collect()
    };

    let power = Region::ALL
        .into_iter()
        .map(|r| {
            let members = &idx[region_slot(r)];
            let v = binned(&|t| members.iter().map(|&c| pow[c * n_t + t]).sum::<f64>() / members.len() as f64);
            (r, v)
        })
        .collect();

    if n_ep < 2 {
        return Err(FeatureError::TooFewEpochs(n_ep));
    }
    let unit = a.values.mapv(|z| if z.norm() > 0.0 { z / z.norm() } else { z });
    let plv = RegionPair::all()
        .into_iter()
        .map(|pair| {
            let pairs = electrode_pairs(pair, idx);
            let courses: Vec<Vec<f64>> = pairs
                .par_iter()
                .map(|&(x, y)| {
                    (0..n_t)
                        .map(|t| {
                            let s: rustfft::num_complex::Complex64 =
                                (0..n_ep).map(|e| unit[[x, e, t]] * unit[[y, e, t]].conj()).sum();
                            s.norm() / n_ep as f64
                        })
                        .collect()
                })
                .collect();
            let v = binned(&|t| courses.iter().map(|c| c[t]).sum::<f64>() / courses.len() as f64);
            (pair, v)
        })
        .collect();
    Ok(ConditionDynamics {
        power,
        plv,
        n_epochs: n_ep,
    })
}

/// Band power and region-pair locking in consecutive bins for target and
/// non-target epochs.
///
/// Bins of `bin_ms` tile `window_ms` (relative to the flash); by default the
/// whole epoch. Epochs may be longer than the binned window so that slow bands
/// have enough cycles for the analytic signal.
pub fn erp_band_dynamics(
    target: &EpochSet,
    nontarget: &EpochSet,
    band: &FrequencyBand,
    regions: &RegionMap,
    bin_ms: f64,
    window_ms: Option<(f64, f64)>,
) -> Result<BandDynamics, FeatureError> {
    if target.is_empty() || nontarget.is_empty() {
        return Err(FeatureError::EmptyEpochSet);
    }
    if target.n_samples() != nontarget.n_samples()
        || target.channel_names != nontarget.channel_names
        || target.t0_ms() != nontarget.t0_ms()
        || target.fs != nontarget.fs
    {
        return Err(FeatureError::ShapeMismatch(
            "target and non-target epochs differ in shape".into(),
        ));
    }
    if !(bin_ms > 0.0) {
        return Err(FeatureError::ShapeMismatch("bin width must be positive".into()));
    }
    let (start, end) = window_ms.unwrap_or_else(|| {
        let t0 = target.t0_ms();
        (t0, t0 + target.n_samples() as f64 * 1000.0 / target.fs)
    });
    let n_bins = ((end - start) / bin_ms + 1e-9).floor() as usize;
    let bins_ms: Vec<(f64, f64)> = (0..n_bins)
        .map(|k| (start + k as f64 * bin_ms, start + (k + 1) as f64 * bin_ms))
        .collect();
    let idx = regions
        .indices(&target.channel_names)
        .map_err(FeatureError::MissingElectrode)?;
    Ok(BandDynamics {
        band: *band,
        target: condition(target, band, &idx, &bins_ms)?,
        nontarget: condition(nontarget, band, &idx, &bins_ms)?,
        bins_ms,
    })
}

fn mean_maps<K: Ord + Copy>(maps: &[&BTreeMap<K, Vec<f64>>]) -> BTreeMap<K, Vec<f64>> {
    let mut out: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for m in maps {
        for (k, v) in m.iter() {
            let acc = out.entry(*k).or_insert_with(|| vec![0.0; v.len()]);
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b / maps.len() as f64);
        }
    }
    out
}

fn mean_condition(cs: &[&ConditionDynamics]) -> ConditionDynamics {
    ConditionDynamics {
        power: mean_maps(&cs.iter().map(|c| &c.power).collect::<Vec<_>>()),
        plv: mean_maps(&cs.iter().map(|c| &c.plv).collect::<Vec<_>>()),
        n_epochs: cs.iter().map(|c| c.n_epochs).sum(),
    }
}

/// Grand average of per-subject dynamics sharing band and bins.
pub fn average_dynamics(subjects: &[BandDynamics]) -> Result<BandDynamics, FeatureError> {
    let first = subjects.first().ok_or(FeatureError::EmptyEpochSet)?;
    if subjects
        .iter()
        .any(|s| s.bins_ms != first.bins_ms || s.band != first.band)
    {
        return Err(FeatureError::ShapeMismatch("subjects disagree on band or bins".into()));
    }
    Ok(BandDynamics {
        band: first.band,
        bins_ms: first.bins_ms.clone(),
        target: mean_condition(&subjects.iter().map(|s| &s.target).collect::<Vec<_>>()),
        nontarget: mean_condition(&subjects.iter().map(|s| &s.nontarget).collect::<Vec<_>>()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BandName;
    use crate::montage::montage_labels;
    use crate::preprocess::{Epoch, EpochLabel};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn set(label: EpochLabel, n_ep: usize, seed: u64, burst: bool) -> EpochSet {
        let names = montage_labels();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let epochs = (0..n_ep)
            .map(|i| {
                let mut d = Array2::from_shape_fn((32, 80), |_| normal.sample(&mut rng));
                if burst {
                    for c in 0..32 {
                        for t in 30..50 {
                            d[[c, t]] += 5.0 * (2.0 * PI * 10.0 * t as f64 / 100.0).sin();
                        }
                    }
                }
                Epoch {
                    data: d,
                    t0_ms: 0.0,
                    label,
                    sequence_index: Some(1),
                    stimulus_group: Some(0),
                    trial_id: Some(i),
                    onset_sample: 100 * i,
                    object_ids: vec![],
                }
            })
            .collect();
        EpochSet {
            subject_id: "S".into(),
            fs: 100.0,
            channel_names: names,
            epochs,
            rejected_count: 0,
            interpolated: vec![],
        }
    }

    #[test]
    fn planted_burst_raises_target_power() {
        let alpha = FrequencyBand::canonical(BandName::Alpha);
        let t = set(EpochLabel::Target, 20, 1, true);
        let n = set(EpochLabel::NonTarget, 20, 2, false);
        let d = erp_band_dynamics(&t, &n, &alpha, &RegionMap::default(), 100.0, None).unwrap();
        assert_eq!(d.bins_ms.len(), 8);
        for r in Region::ALL {
            for k in [3, 4] {
                assert!(d.target.power[&r][k] > d.nontarget.power[&r][k]);
            }
        }
    }

    #[test]
    fn identical_sets_give_identical_courses() {
        let theta = FrequencyBand::canonical(BandName::Theta);
        let t = set(EpochLabel::Target, 5, 3, false);
        let d = erp_band_dynamics(&t, &t, &theta, &RegionMap::default(), 100.0, None).unwrap();
        assert_eq!(d.target, d.nontarget);
        assert_eq!(d.target.plv.len(), 10);
        let avg = average_dynamics(&[d.clone(), d.clone()]).unwrap();
        for (k, v) in &avg.target.power {
            for (a, b) in v.iter().zip(&d.target.power[k]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let theta = FrequencyBand::canonical(BandName::Theta);
        let t = set(EpochLabel::Target, 3, 3, false);
        let mut n = set(EpochLabel::NonTarget, 3, 4, false);
        n.epochs
            .iter_mut()
            .for_each(|e| e.data = e.data.slice(ndarray::s![.., ..70]).to_owned());
        assert!(matches!(
            erp_band_dynamics(&t, &n, &theta, &RegionMap::default(), 100.0, None),
            Err(FeatureError::ShapeMismatch(_))
        ));
    }
}
