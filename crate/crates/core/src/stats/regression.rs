use super::StatsError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Ordinary least squares with intercept on standardized predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub predictor_ids: Vec<String>,
    /// Intercept first, then one slope per predictor on the original scale.
    pub coefficients: Vec<f64>,
    /// Mean squared leave-one-subject-out prediction error.
    pub mse_loocv: f64,
    pub mse_insample: f64,
    /// Minimum-norm solution of an underdetermined or rank-deficient system.
    pub degenerate: bool,
    pub n_subjects: usize,
}

impl RegressionModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept() + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

struct Fit {
    coefficients: Vec<f64>,
    rank_deficient: bool,
}

/// Center and scale columns, solve by SVD with a relative singular-value
/// cutoff, and map slopes back to the original units.
fn solve(x: &DMatrix<f64>, y: &[f64]) -> Fit {
    let (n, k) = x.shape();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut means = vec![0.0; k];
    let mut sds = vec![1.0; k];
    let mut z = x.clone();
    for j in 0..k {
        let col = x.column(j);
        let m = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
        means[j] = m;
        sds[j] = if sd > 1e-12 * m.abs().max(1.0) { sd } else { 1.0 };
        for i in 0..n {
            z[(i, j)] = (x[(i, j)] - m) / sds[j];
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = z.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let eps = f64::EPSILON * n.max(k) as f64 * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let beta = svd.solve(&yc, eps).expect("both factors were computed");
    let mut coefficients = vec![0.0; k + 1];
    for j in 0..k {
        coefficients[j + 1] = beta[j] / sds[j];
    }
    coefficients[0] = y_mean - (0..k).map(|j| coefficients[j + 1] * means[j]).sum::<f64>();
    Fit {
        coefficients,
        rank_deficient: rank < k,
    }
}

fn predict_row(coef: &[f64], x: &DMatrix<f64>, i: usize) -> f64 {
    coef[0] + (0..x.ncols()).map(|j| coef[j + 1] * x[(i, j)]).sum::<f64>()
}

/// Fit `y` (performance in percent) on the predictor columns of `x`
/// (subjects x predictors), reporting in-sample and leave-one-out error.
pub fn fit_predictor(x: &[Vec<f64>], y: &[f64], predictor_ids: &[String]) -> Result<RegressionModel, StatsError> {
    let n = y.len();
    if x.len() != n {
        return Err(StatsError::LengthMismatch(x.len(), n));
    }
    if n < 3 {
        return Err(StatsError::TooFewSubjects(n));
    }
    let k = predictor_ids.len();
    if let Some(row) = x.iter().find(|r| r.len() != k) {
        return Err(StatsError::LengthMismatch(row.len(), k));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let m = DMatrix::from_fn(n, k, |i, j| x[i][j]);
    let full = solve(&m, y);
    let mse_insample = (0..n)
        .map(|i| (y[i] - predict_row(&full.coefficients, &m, i)).powi(2))
        .sum::<f64>()
        / n as f64;
    let mut sq = 0.0;
    for held in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&i| i != held).collect();
        let train = m.select_rows(&keep);
        let ty: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
        let fit = solve(&train, &ty);
        sq += (y[held] - predict_row(&fit.coefficients, &m, held)).powi(2);
    }
    Ok(RegressionModel {
        predictor_ids: predictor_ids.to_vec(),
        coefficients: full.coefficients,
        mse_loocv: sq / n as f64,
        mse_insample,
        degenerate: k + 1 >= n || full.rank_deficient,
        n_subjects: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ids(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    fn random_x(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| (0..k).map(|_| normal.sample(rng)).collect()).collect()
    }

    #[test]
    fn noiseless_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_x(&mut rng, 10, 1);
        let y: Vec<f64> = x.iter().map(|r| 40.0 + 12.5 * r[0]).collect();
        let m = fit_predictor(&x, &y, &ids(1)).unwrap();
        assert!(m.mse_loocv < 1e-9);
        assert!((m.coefficients[1] - 12.5).abs() < 1e-9);
        assert!((m.intercept() - 40.0).abs() < 1e-9);
        assert!(!m.degenerate);
    }

    #[test]
    fn square_system_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_x(&mut rng, 8, 8);
        let y: Vec<f64> = (0..8).map(|i| 20.0 + 7.0 * i as f64).collect();
        let m = fit_predictor(&x, &y, &ids(8)).unwrap();
        assert!(m.degenerate);
        assert!(m.mse_insample < 1e-18, "{}", m.mse_insample);
        assert_eq!(m.coefficients.len(), 9);
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_x(&mut rng, 20, 3);
        let noise = Normal::new(0.0, 4.0).unwrap();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 10.0 + 3.0 * r[0] - 2.0 * r[2] + noise.sample(&mut rng))
            .collect();
        let m = fit_predictor(&x, &y, &ids(3)).unwrap();
        let res: Vec<f64> = x.iter().zip(&y).map(|(r, v)| v - m.predict(r)).collect();
        assert!(res.iter().sum::<f64>().abs() < 1e-9);
        for j in 0..3 {
            let dot: f64 = x.iter().zip(&res).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-9, "{dot}");
        }
        assert!(m.mse_loocv > m.mse_insample);
    }

    #[test]
    fn duplicate_column_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = random_x(&mut rng, 12, 2);
        x.iter_mut().for_each(|r| r[1] = r[0]);
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        let m = fit_predictor(&x, &y, &ids(2)).unwrap();
        assert!(m.degenerate);
        assert!((m.coefficients[1] - m.coefficients[2]).abs() < 1e-9);
        assert!(m.mse_insample < 1e-18);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_predictor(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &ids(1)),
            Err(StatsError::TooFewSubjects(2))
        ));
        assert!(matches!(
            fit_predictor(&[vec![1.0], vec![2.0], vec![f64::NAN]], &[1.0, 2.0, 3.0], &ids(1)),
            Err(StatsError::NonFinite)
        ));
    }
}
