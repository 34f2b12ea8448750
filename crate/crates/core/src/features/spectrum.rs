use super::{FeatureError, FrequencyBand};
use crate::ingest::SpectrumWindow;
use crate::montage::{Region, RegionMap};
use crate::preprocess::EpochSet;
use ndarray::Array2;
use rustfft::{num_complex::Complex64, FftPlanner};
use std::collections::BTreeMap;

/// Epoch-averaged one-sided power spectral density, channels x bins, in µV²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Array2<f64>,
    pub resolution: f64,
    pub fs: f64,
}

impl Spectrum {
    pub fn nyquist(&self) -> f64 {
        self.fs / 2.0
    }

    /// Density integrated over every bin, per channel.
    pub fn total_power(&self) -> Vec<f64> {
        self.power.outer_iter().map(|row| row.sum() * self.resolution).collect()
    }
}

fn window(kind: SpectrumWindow, n: usize) -> Vec<f64> {
    match kind {
        SpectrumWindow::Rectangular => vec![1.0; n],
        SpectrumWindow::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

/// Periodogram of every epoch and channel, averaged over epochs.
///
/// Each periodogram is `|FFT|^2 / (fs * sum(w^2))` with non-DC, non-Nyquist
/// bins doubled, so that with the rectangular window the density summed over
/// bins times the resolution equals the time-domain mean square.
pub fn compute_spectrum(epochs: &EpochSet, kind: SpectrumWindow) -> Result<Spectrum, FeatureError> {
    if epochs.is_empty() {
        return Err(FeatureError::EmptyEpochSet);
    }
    let n = epochs.n_samples();
    if epochs.epochs.iter().any(|e| e.data.ncols() != n) || n == 0 {
        return Err(FeatureError::ShapeMismatch("epochs differ in length".into()));
    }
    let fs = epochs.fs;
    let n_ch = epochs.n_channels();
    let n_bins = n / 2 + 1;
    let w = window(kind, n);
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut power = Array2::<f64>::zeros((n_ch, n_bins));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for epoch in &epochs.epochs {
        for (ch, row) in epoch.data.outer_iter().enumerate() {
            for (b, (&x, &wi)) in buf.iter_mut().zip(row.iter().zip(&w)) {
                *b = Complex64::new(x * wi, 0.0);
            }
            fft.process(&mut buf);
            for k in 0..n_bins {
                let mut p = buf[k].norm_sqr() / (fs * wss);
                if k != 0 && !(n.is_multiple_of(2) && k == n / 2) {
                    p *= 2.0;
                }
                power[[ch, k]] += p;
            }
        }
    }
    power.mapv_inplace(|p| p / epochs.len() as f64);
    let resolution = fs / n as f64;
    Ok(Spectrum {
        freqs: (0..n_bins).map(|k| k as f64 * resolution).collect(),
        power,
        resolution,
        fs,
    })
}

/// Band power in dB re 1 µV²: `10 log10(2 * sum_{f1 <= f <= f2} P(f) * df)`.
///
/// The leading factor 2 is kept as written in the defining formula even
/// though the density is already one-sided.
pub fn band_psd(spec: &Spectrum, band: &FrequencyBand) -> Result<Vec<f64>, FeatureError> {
    if !(band.f1 >= 0.0 && band.f1 < band.f2 && band.f2 <= spec.nyquist() + 1e-9) {
        return Err(FeatureError::BandOutsideSpectrum(*band));
    }
    let bins: Vec<usize> = spec
        .freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= band.f1 - 1e-9 && f <= band.f2 + 1e-9)
        .map(|(k, _)| k)
        .collect();
    if bins.is_empty() {
        return Err(FeatureError::BandOutsideSpectrum(*band));
    }
    Ok(spec
        .power
        .outer_iter()
        .map(|row| {
            let integral: f64 = bins.iter().map(|&k| row[k]).sum::<f64>() * spec.resolution;
            10.0 * (2.0 * integral).log10()
        })
        .collect())
}

/// Arithmetic mean of per-channel dB values within each region.
pub fn region_band_power(
    per_channel_db: &[f64],
    channel_names: &[String],
    regions: &RegionMap,
) -> Result<BTreeMap<Region, f64>, FeatureError> {
    let idx = regions.indices(channel_names).map_err(FeatureError::MissingElectrode)?;
    Ok(Region::ALL
        .into_iter()
        .map(|r| {
            let members = &idx[crate::montage::region_slot(r)];
            let mean = members.iter().map(|&c| per_channel_db[c]).sum::<f64>() / members.len() as f64;
            (r, mean)
        })
        .collect())
}
