use super::{FeatureError, FrequencyBand};
use crate::preprocess::EpochSet;
use ndarray::Array3;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;
use std::ops::Range;

/// Fraction of samples at each epoch edge excluded from averaging.
pub const EDGE_FRACTION: f64 = 0.1;
/// Order of the band-limiting Butterworth edges used before the Hilbert step.
const BAND_ORDER: usize = 4;

/// Discrete analytic signal: FFT, zero the negative frequencies, double the
/// positive ones, inverse FFT.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    filtered_analytic(x, None)
}

/// Analytic signal after scaling each positive-frequency bin by `gain[k]`.
fn filtered_analytic(x: &[f64], gain: Option<&[f64]>) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        let g = match gain {
            Some(g) if k <= half => g[k],
            _ => 1.0,
        };
        *b *= h * g / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Squared magnitude of a digital Butterworth band-pass (bilinear transform
/// of the low-pass prototype) at frequency `f`; this is the gain of running
/// the filter forward and backward.
pub(crate) fn bandpass_power(band: &FrequencyBand, order: usize, f: f64, fs: f64) -> f64 {
    let warp = |x: f64| (PI * x / fs).tan();
    let (w1, w2) = (warp(band.f1), warp(band.f2));
    let w = warp(f);
    if w == 0.0 {
        return 0.0;
    }
    let ratio = (w * w - w1 * w2) / (w * (w2 - w1));
    1.0 / (1.0 + ratio.powi(2 * order as i32))
}

fn zero_phase_gain(band: &FrequencyBand, n: usize, fs: f64) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| bandpass_power(band, BAND_ORDER, k as f64 * fs / n as f64, fs))
        .collect()
}

/// Wrap an angle from `atan2` into (-pi, pi].
pub(crate) fn wrap_angle(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Band-limited analytic signals, channels x epochs x samples.
#[derive(Debug, Clone)]
pub struct AnalyticEpochs {
    pub values: Array3<Complex64>,
    pub band: FrequencyBand,
    pub interior: Range<usize>,
    pub fs: f64,
    pub t0_ms: f64,
}

/// Instantaneous phase in radians, channels x epochs x samples.
#[derive(Debug, Clone)]
pub struct PhaseEpochs {
    pub phase: Array3<f64>,
    pub band: FrequencyBand,
    /// Samples outside this range are edge-distorted and skipped downstream.
    pub interior: Range<usize>,
    pub channel_names: Vec<String>,
}

impl PhaseEpochs {
    pub fn n_channels(&self) -> usize {
        self.phase.dim().0
    }

    pub fn n_epochs(&self) -> usize {
        self.phase.dim().1
    }

    pub fn n_samples(&self) -> usize {
        self.phase.dim().2
    }

    /// Wrap an existing phase tensor; the interior excludes `EDGE_FRACTION`
    /// of samples at each end.
    pub fn from_phase(phase: Array3<f64>, band: FrequencyBand, channel_names: Vec<String>) -> Self {
        let interior = interior_range(phase.dim().2);
        Self {
            phase,
            band,
            interior,
            channel_names,
        }
    }
}

pub(crate) fn interior_range(n: usize) -> Range<usize> {
    let edge = (EDGE_FRACTION * n as f64).floor() as usize;
    edge..n - edge
}

/// Zero-phase band-pass then Hilbert transform of every epoch and channel.
///
/// Both steps run in the frequency domain on each epoch: every bin is scaled
/// by the squared magnitude of the Butterworth band-pass (the response of a
/// forward-backward pass) and by the one-sided analytic mask. Edges wrap
/// circularly, which is why the outer samples are excluded downstream.
pub fn analytic_epochs(epochs: &EpochSet, band: &FrequencyBand) -> Result<AnalyticEpochs, FeatureError> {
    if epochs.is_empty() {
        return Err(FeatureError::EmptyEpochSet);
    }
    let fs = epochs.fs;
    if !(band.f1 > 0.0 && band.f1 < band.f2 && band.f2 < fs / 2.0) {
        return Err(FeatureError::BandOutsideSpectrum(*band));
    }
    let n = epochs.n_samples();
    if epochs.epochs.iter().any(|e| e.data.ncols() != n) {
        return Err(FeatureError::ShapeMismatch("epochs differ in length".into()));
    }
    let needed = 3.0 / band.center();
    if (n as f64) / fs < needed {
        return Err(FeatureError::EpochTooShortForBand {
            band: *band,
            seconds: n as f64 / fs,
            needed,
        });
    }
    let gain = zero_phase_gain(band, n, fs);
    let n_ch = epochs.n_channels();
    let n_ep = epochs.len();
    let rows: Vec<Vec<Complex64>> = (0..n_ch * n_ep)
        .into_par_iter()
        .map(|k| {
            let (ch, ep) = (k / n_ep, k % n_ep);
            let row = epochs.epochs[ep].data.row(ch).to_vec();
            filtered_analytic(&row, Some(&gain))
        })
        .collect();
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let values = Array3::from_shape_vec((n_ch, n_ep, n), flat).expect("shape computed above");
    Ok(AnalyticEpochs {
        values,
        band: *band,
        interior: interior_range(n),
        fs,
        t0_ms: epochs.t0_ms(),
    })
}

/// Phase of the band-limited analytic signal, values in (-pi, pi].
pub fn instantaneous_phase(epochs: &EpochSet, band: &FrequencyBand) -> Result<PhaseEpochs, FeatureError> {
    let a = analytic_epochs(epochs, band)?;
    Ok(PhaseEpochs {
        phase: a.values.mapv(|z| wrap_angle(z.im.atan2(z.re))),
        band: a.band,
        interior: a.interior,
        channel_names: epochs.channel_names.clone(),
    })
}
