use super::{EpochSet, Interpolation, PreprocessError};
use crate::montage::Layout;
use rayon::prelude::*;

/// Neighbors used to rebuild an offending channel.
const N_NEIGHBORS: usize = 4;

enum Outcome {
    Keep(ndarray::Array2<f64>, Vec<(String, Vec<(usize, f64)>)>),
    Reject,
}

/// Amplitude rule: a channel offends when any |sample| exceeds
/// `threshold_uv`. Epochs with more than `reject_fraction` of their channels
/// offending are dropped; otherwise each offending channel is replaced by the
/// inverse-distance-weighted mean of its four nearest clean channels.
pub fn reject_artifacts(
    eps: &EpochSet,
    threshold_uv: f64,
    reject_fraction: f64,
    layout: &Layout,
) -> Result<EpochSet, PreprocessError> {
    if !(threshold_uv > 0.0) {
        return Err(PreprocessError::InvalidThreshold);
    }
    let n_ch = eps.n_channels();
    let outcomes: Vec<Outcome> = eps
        .epochs
        .par_iter()
        .enumerate()
        .map(|(idx, epoch)| {
            let bad: Vec<bool> = epoch
                .data
                .outer_iter()
                .map(|row| row.iter().any(|v| v.abs() > threshold_uv))
                .collect();
            let n_bad = bad.iter().filter(|&&b| b).count();
            if n_bad == 0 {
                return Ok(Outcome::Keep(epoch.data.clone(), Vec::new()));
            }
            if n_bad as f64 > reject_fraction * n_ch as f64 {
                return Ok(Outcome::Reject);
            }
            let mut data = epoch.data.clone();
            let mut log = Vec::new();
            for ch in (0..n_ch).filter(|&c| bad[c]) {
                let no_neighbor = || PreprocessError::AllChannelsBad {
                    epoch: idx,
                    channel: eps.channel_names[ch].clone(),
                };
                let mut cands: Vec<(f64, usize)> = (0..n_ch)
                    .filter(|&c| !bad[c])
                    .filter_map(|c| layout.distance(ch, c).map(|d| (d, c)))
                    .collect();
                if cands.is_empty() {
                    return Err(no_neighbor());
                }
                cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cands.truncate(N_NEIGHBORS);
                let inv: Vec<f64> = cands.iter().map(|&(d, _)| 1.0 / d.max(1e-12)).collect();
                let total: f64 = inv.iter().sum();
                let neighbors: Vec<(usize, f64)> = cands.iter().zip(&inv).map(|(&(_, c), &w)| (c, w / total)).collect();
                for t in 0..data.ncols() {
                    data[[ch, t]] = neighbors.iter().map(|&(c, w)| w * epoch.data[[c, t]]).sum();
                }
                log.push((eps.channel_names[ch].clone(), neighbors));
            }
            Ok(Outcome::Keep(data, log))
        })
        .collect::<Result<_, PreprocessError>>()?;

    let mut out = eps.clone_meta();
    out.interpolated = Vec::new();
    for (epoch, outcome) in eps.epochs.iter().zip(outcomes) {
        match outcome {
            Outcome::Reject => out.rejected_count += 1,
            Outcome::Keep(data, log) => {
                let idx = out.epochs.len();
                out.interpolated
                    .extend(log.into_iter().map(|(channel, neighbors)| Interpolation {
                        epoch: idx,
                        channel,
                        neighbors,
                    }));
                let mut e = epoch.clone();
                e.data = data;
                out.epochs.push(e);
            }
        }
    }
    Ok(out)
}
