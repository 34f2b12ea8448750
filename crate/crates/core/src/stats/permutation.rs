use super::StatsError;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Largest subject count for which every sign pattern is enumerated.
pub const EXHAUSTIVE_MAX_SUBJECTS: usize = 12;
/// Relative slack when comparing permuted and observed statistics, so that
/// patterns equal up to rounding count as at least as extreme.
const TIE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationResult {
    /// Mean paired difference per bin.
    pub statistic: Vec<f64>,
    pub p: Vec<f64>,
    /// `p <= alpha / bins`.
    pub significant: Vec<bool>,
    pub alpha: f64,
    pub n_permutations: usize,
    pub exhaustive: bool,
}

impl PermutationResult {
    /// Recompute the corrected mask at another level.
    pub fn mask_at(&self, alpha: f64) -> Vec<bool> {
        let cut = alpha / self.p.len() as f64;
        self.p.iter().map(|&p| p <= cut).collect()
    }
}

fn sign_pattern(index: u64, n: usize) -> Vec<f64> {
    (0..n).map(|s| if index >> s & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

/// Two-tailed paired sign-flip test of `a - b` in each bin, both
/// subjects x bins. Up to 12 subjects every pattern is used; beyond that
/// `n_random` patterns (the first being the identity) are drawn from a
/// generator seeded per replicate from `seed`. The same patterns serve
/// every bin.
pub fn paired_permutation(
    a: &Array2<f64>,
    b: &Array2<f64>,
    alpha: f64,
    n_random: usize,
    seed: u64,
) -> Result<PermutationResult, StatsError> {
    if a.dim() != b.dim() {
        return Err(StatsError::ShapeMismatch(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    let (n, bins) = a.dim();
    if n < 2 || bins == 0 {
        return Err(StatsError::ShapeMismatch(format!(
            "need at least 2 subjects and 1 bin, got {n} x {bins}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let diff = a - b;
    if diff.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let observed: Vec<f64> = (0..bins).map(|j| diff.column(j).sum() / n as f64).collect();
    let exhaustive = n <= EXHAUSTIVE_MAX_SUBJECTS;
    let total = if exhaustive { 1usize << n } else { n_random.max(1) };

    let counts = (0..total)
        .into_par_iter()
        .map(|r| {
            let signs = if exhaustive {
                sign_pattern(r as u64, n)
            } else if r == 0 {
                vec![1.0; n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                (0..n).map(|_| if rng.random::<bool>() { -1.0 } else { 1.0 }).collect()
            };
            (0..bins)
                .map(|j| {
                    let stat = signs.iter().zip(diff.column(j)).map(|(s, d)| s * d).sum::<f64>() / n as f64;
                    usize::from(stat.abs() >= observed[j].abs() * (1.0 - TIE_SLACK))
                })
                .collect::<Vec<usize>>()
        })
        .reduce(
            || vec![0; bins],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let cut = alpha / bins as f64;
    Ok(PermutationResult {
        statistic: observed,
        significant: p.iter().map(|&v| v <= cut).collect(),
        p,
        alpha,
        n_permutations: total,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_inputs_give_unit_p() {
        let a = Array2::from_shape_fn((6, 4), |(i, j)| (i * j) as f64);
        let r = paired_permutation(&a, &a, 0.05, 1000, 1).unwrap();
        assert!(r.p.iter().all(|&p| p == 1.0));
        assert!(r.significant.iter().all(|&s| !s));
    }

    #[test]
    fn large_shift_hits_exhaustive_floor() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = Array2::from_shape_fn((8, 3), |_| normal.sample(&mut rng));
        let a = &b + 100.0;
        let r = paired_permutation(&a, &b, 0.05, 1000, 1).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.n_permutations, 256);
        assert!(r.p.iter().all(|&p| p == 2.0 / 256.0));
        assert!(r.significant.iter().all(|&s| s));
    }

    #[test]
    fn sampled_mode_is_seeded_and_bounded() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((20, 5), |_| normal.sample(&mut rng));
        let b = Array2::from_shape_fn((20, 5), |_| normal.sample(&mut rng));
        let r1 = paired_permutation(&a, &b, 0.05, 2000, 9).unwrap();
        let r2 = paired_permutation(&a, &b, 0.05, 2000, 9).unwrap();
        assert_eq!(r1, r2);
        assert!(!r1.exhaustive);
        assert!(r1.p.iter().all(|&p| (1.0 / 2000.0..=1.0).contains(&p)));
    }

    #[test]
    fn null_rejection_rate_is_calibrated() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rejected = 0;
        for rep in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
            let a = Array2::from_shape_fn((8, 1), |_| normal.sample(&mut rng));
            let b = Array2::from_shape_fn((8, 1), |_| normal.sample(&mut rng));
            let r = paired_permutation(&a, &b, 0.05, 0, 0).unwrap();
            rejected += usize::from(r.p[0] <= 0.05);
        }
        let rate = rejected as f64 / 1000.0;
        assert!((0.03..=0.07).contains(&rate), "{rate}");
    }

    #[test]
    fn lower_alpha_never_adds_bins() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = Array2::from_shape_fn((10, 8), |_| normal.sample(&mut rng));
        let a = Array2::from_shape_fn((10, 8), |(_, j)| normal.sample(&mut rng) + j as f64 * 0.4) + &b;
        let r = paired_permutation(&a, &b, 0.05, 0, 0).unwrap();
        let strict = r.mask_at(0.01);
        assert!(strict.iter().zip(&r.significant).all(|(s, l)| !s || *l));
        assert_eq!(r.mask_at(0.05), r.significant);
    }

    #[test]
    fn shape_errors() {
        let a = Array2::zeros((4, 3));
        let b = Array2::zeros((4, 2));
        assert!(matches!(
            paired_permutation(&a, &b, 0.05, 10, 0),
            Err(StatsError::ShapeMismatch(_))
        ));
    }
}
