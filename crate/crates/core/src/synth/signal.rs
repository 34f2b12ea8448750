//! Narrowband analytic carriers and circular phase jitter.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;

/// Complex analytic Gaussian noise of length `n` whose spectrum occupies
/// `[f1, f2]` Hz, scaled so the real part has RMS `amplitude`.
pub fn analytic_carrier<R: Rng>(rng: &mut R, n: usize, fs: f64, f1: f64, f2: f64, amplitude: f64) -> Vec<Complex64> {
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 || amplitude == 0.0 {
        return spec;
    }
    let df = fs / n as f64;
    let mut any = false;
    for (k, c) in spec.iter_mut().enumerate().take(n.div_ceil(2)).skip(1) {
        let f = k as f64 * df;
        if f >= f1 && f <= f2 {
            *c = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            any = true;
        }
    }
    if !any {
        return spec;
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut spec);
    let rms = (spec.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64).sqrt();
    let scale = amplitude / rms;
    spec.iter_mut().for_each(|z| *z *= scale);
    spec
}

/// Mean resultant length of a von Mises distribution, `I1(k) / I0(k)`,
/// by backward evaluation of its continued fraction.
pub fn mean_resultant_length(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for m in (1..=400).rev() {
        tail = 1.0 / (2.0 * m as f64 / kappa + tail);
    }
    tail
}

/// Concentration whose mean resultant length equals `target`; infinite at 1.
pub fn kappa_for_resultant(target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    if target >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean_resultant_length(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_resultant_length(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `count` evenly spaced quantiles of a zero-mean von Mises distribution,
/// at probabilities `(k + 0.5) / count`. Their mean resultant length matches
/// the distribution's far more closely than independent draws would.
pub fn von_mises_quantiles(kappa: f64, count: usize) -> Vec<f64> {
    if kappa.is_infinite() {
        return vec![0.0; count];
    }
    const GRID: usize = 8192;
    let step = 2.0 * PI / GRID as f64;
    let at = |i: usize| -PI + i as f64 * step;
    let density = |t: f64| (kappa * (t.cos() - 1.0)).exp();
    let mut cdf = vec![0.0; GRID + 1];
    for i in 1..=GRID {
        cdf[i] = cdf[i - 1] + 0.5 * (density(at(i - 1)) + density(at(i))) * step;
    }
    let total = cdf[GRID];
    (0..count)
        .map(|k| {
            let q = (k as f64 + 0.5) / count as f64 * total;
            let i = cdf.partition_point(|&c| c < q).clamp(1, GRID);
            let (c0, c1) = (cdf[i - 1], cdf[i]);
            let frac = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
            at(i - 1) + frac * step
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// I1/I0 from their power series.
    fn series_ratio(k: f64) -> f64 {
        let (mut i0, mut i1) = (0.0, 0.0);
        let mut term: f64 = 1.0;
        for m in 0..200 {
            let mf = m as f64;
            if m > 0 {
                term *= (k / 2.0).powi(2) / (mf * mf);
            }
            i0 += term;
            i1 += term * (k / 2.0) / (mf + 1.0);
        }
        i1 / i0
    }

    #[test]
    fn resultant_matches_series() {
        for &k in &[0.01, 0.5, 1.0, 2.0, 5.0, 20.0] {
            assert!((mean_resultant_length(k) - series_ratio(k)).abs() < 1e-12, "{k}");
        }
        for &t in &[0.1, 0.3, 0.6, 0.9, 0.99] {
            assert!((mean_resultant_length(kappa_for_resultant(t)) - t).abs() < 1e-10);
        }
    }

    #[test]
    fn quantile_resultant_matches_target() {
        for &t in &[0.0, 0.3, 0.6, 0.9, 1.0] {
            let q = von_mises_quantiles(kappa_for_resultant(t), 120);
            assert!(q.windows(2).all(|w| w[0] <= w[1]));
            assert!(q.iter().all(|th| th.abs() <= PI));
            let (c, s) = q.iter().fold((0.0, 0.0), |(c, s), th| (c + th.cos(), s + th.sin()));
            let r = (c * c + s * s).sqrt() / 120.0;
            assert!((r - t).abs() < 2e-3, "{t}: {r}");
            assert!(s.abs() < 1e-9);
        }
    }

    #[test]
    fn carrier_is_band_limited_with_requested_rms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = analytic_carrier(&mut rng, 2000, 100.0, 8.0, 12.0, 5.0);
        let rms = (z.iter().map(|v| v.re * v.re).sum::<f64>() / 2000.0).sqrt();
        assert!((rms - 5.0).abs() < 1e-9);
        let mut buf = z.clone();
        FftPlanner::<f64>::new().plan_fft_forward(2000).process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            let f = k as f64 * 100.0 / 2000.0;
            if !(8.0..=12.0).contains(&f) {
                assert!(b.norm() < 1e-6, "{f}");
            }
        }
    }
}
