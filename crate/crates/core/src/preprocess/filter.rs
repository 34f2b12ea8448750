//! Butterworth and notch biquad cascades with forward-backward application.

use super::PreprocessError;
use std::f64::consts::PI;

/// Relative level below which the impulse response counts as settled.
const SETTLE_LEVEL: f64 = 1e-3;
/// Longest impulse response examined when estimating settling, in seconds.
const SETTLE_HORIZON_S: f64 = 60.0;

/// Second-order section with `a0` normalized to 1, run in transposed
/// direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn lowpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    fn highpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        Self {
            b0: norm,
            b1: -2.0 * norm,
            b2: norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Second-order notch whose -3 dB stop band is exactly `w0 / q` wide.
    fn notch(w0: f64, q: f64) -> Self {
        let alpha = (w0 / (2.0 * q)).tan();
        let a0 = 1.0 + alpha;
        let c = -2.0 * w0.cos() / a0;
        Self {
            b0: 1.0 / a0,
            b1: c,
            b2: 1.0 / a0,
            a1: c,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Gain at DC.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Complex response magnitude at normalized angular frequency `w`.
    pub fn magnitude(&self, w: f64) -> f64 {
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }

    /// Filter `x` in place starting from states `(s1, s2)`.
    fn run(&self, x: &mut [f64], mut s1: f64, mut s2: f64) {
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * y + s2;
            s2 = self.b2 * input - self.a2 * y;
            *v = y;
        }
    }

    /// States that make a constant input `level` pass without a transient.
    fn steady_state(&self, level: f64) -> (f64, f64) {
        let g = self.dc_gain();
        ((g - self.b0) * level, (self.b2 - self.a2 * g) * level)
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub sections: Vec<Biquad>,
}

impl Cascade {
    /// Butterworth low-pass of even `order` as `order / 2` biquads.
    pub fn butter_lowpass(order: usize, cutoff: f64, fs: f64) -> Self {
        let k = (PI * cutoff / fs).tan();
        Self {
            sections: butter_qs(order).map(|q| Biquad::lowpass(k, q)).collect(),
        }
    }

    pub fn butter_highpass(order: usize, cutoff: f64, fs: f64) -> Self {
        let k = (PI * cutoff / fs).tan();
        Self {
            sections: butter_qs(order).map(|q| Biquad::highpass(k, q)).collect(),
        }
    }

    /// Band-pass as a high-pass at `low` followed by a low-pass at `high`,
    /// each of the given order.
    pub fn butter_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Self {
        let mut c = Self::butter_highpass(order, low, fs);
        c.sections.extend(Self::butter_lowpass(order, high, fs).sections);
        c
    }

    pub fn notch(center: f64, q: f64, fs: f64) -> Self {
        Self {
            sections: vec![Biquad::notch(2.0 * PI * center / fs, q)],
        }
    }

    /// Single-pass magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq / fs;
        self.sections.iter().map(|s| s.magnitude(w)).product()
    }

    /// Causal filtering with steady-state initial conditions for `x[0]`.
    pub fn filter(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut level = first;
        for s in &self.sections {
            let (s1, s2) = s.steady_state(level);
            s.run(x, s1, s2);
            level *= s.dc_gain();
        }
    }

    /// Forward-backward filtering with odd reflection padding of `pad` samples
    /// at each end; the net phase response is zero.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
        self.filter(&mut ext);
        ext.reverse();
        self.filter(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }

    /// Number of samples until the impulse response stays below 1e-3 of its
    /// peak magnitude.
    pub fn settling_samples(&self, fs: f64) -> usize {
        let len = (SETTLE_HORIZON_S * fs).ceil().max(16.0) as usize;
        let mut h = vec![0.0; len];
        h[0] = 1.0;
        for s in &self.sections {
            s.run(&mut h, 0.0, 0.0);
        }
        let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        h.iter()
            .rposition(|v| v.abs() >= SETTLE_LEVEL * peak)
            .map_or(1, |i| i + 1)
    }
}

fn butter_qs(order: usize) -> impl Iterator<Item = f64> {
    (0..order / 2).map(move |k| {
        let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
        1.0 / (2.0 * theta.sin())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bandpass,
    Notch,
}

/// Declarative filter description.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub low_hz: f64,
    pub high_hz: f64,
    pub notch_hz: f64,
    /// Butterworth order of each band edge (band-pass only).
    pub order: usize,
    pub zero_phase: bool,
    /// Quality factor (notch only).
    pub q: f64,
}

impl FilterSpec {
    pub fn bandpass(low_hz: f64, high_hz: f64) -> Self {
        Self {
            kind: FilterKind::Bandpass,
            low_hz,
            high_hz,
            notch_hz: 0.0,
            order: 4,
            zero_phase: true,
            q: 0.0,
        }
    }

    pub fn notch(notch_hz: f64) -> Self {
        Self {
            kind: FilterKind::Notch,
            low_hz: 0.0,
            high_hz: 0.0,
            notch_hz,
            order: 2,
            zero_phase: true,
            q: 30.0,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn design(&self, fs: f64) -> Result<Cascade, PreprocessError> {
        let nyquist = fs / 2.0;
        match self.kind {
            FilterKind::Bandpass => {
                if self.high_hz >= nyquist {
                    return Err(PreprocessError::EdgeAboveNyquist {
                        edge: self.high_hz,
                        nyquist,
                    });
                }
                if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
                    return Err(PreprocessError::InvalidFilter(format!(
                        "band edges ({}, {}) must satisfy 0 < low < high",
                        self.low_hz, self.high_hz
                    )));
                }
                if self.order < 2 || !self.order.is_multiple_of(2) {
                    return Err(PreprocessError::InvalidFilter(format!(
                        "order {} must be even and at least 2",
                        self.order
                    )));
                }
                Ok(Cascade::butter_bandpass(self.order, self.low_hz, self.high_hz, fs))
            }
            FilterKind::Notch => {
                if self.notch_hz >= nyquist {
                    return Err(PreprocessError::EdgeAboveNyquist {
                        edge: self.notch_hz,
                        nyquist,
                    });
                }
                if !(self.notch_hz > 0.0 && self.q > 0.0) {
                    return Err(PreprocessError::InvalidFilter(format!(
                        "notch at {} Hz with Q {} is invalid",
                        self.notch_hz, self.q
                    )));
                }
                Ok(Cascade::notch(self.notch_hz, self.q, fs))
            }
        }
    }
}
