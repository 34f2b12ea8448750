use super::{ClassifyError, FeatureVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Stopping threshold on the spread of projected dual gradients.
const TOLERANCE: f64 = 1e-6;
/// Upper bound on passes over the training set.
const MAX_PASSES: usize = 2000;

/// Linear soft-margin classifier on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Per-sample loss weights `(target, non_target)`.
    pub class_weights: (f64, f64),
    pub mean: Vec<f64>,
    /// Training standard deviations; constant features get 1.
    pub sd: Vec<f64>,
    pub passes: usize,
    pub converged: bool,
}

impl TrainedClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w . standardize(x) + b`; positive means target.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .zip(self.mean.iter().zip(&self.sd))
            .map(|((w, v), (m, s))| w * (v - m) / s)
            .sum::<f64>()
            + self.bias
    }

    pub fn decisions(&self, vs: &[FeatureVector]) -> Result<Vec<f64>, ClassifyError> {
        vs.iter()
            .map(|v| {
                if v.values.len() != self.dim() {
                    return Err(ClassifyError::DimensionMismatch {
                        expected: self.dim(),
                        got: v.values.len(),
                    });
                }
                Ok(self.decision(&v.values))
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let text = serde_json::to_string_pretty(self).expect("classifier serializes");
        std::fs::write(path, text).map_err(|e| ClassifyError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let err = |reason: String| ClassifyError::File {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let clf: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if clf.mean.len() != clf.dim() || clf.sd.len() != clf.dim() || clf.sd.iter().any(|&s| !(s > 0.0)) {
            return Err(err("inconsistent standardization".into()));
        }
        Ok(clf)
    }
}

fn standardization(vs: &[FeatureVector], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = vs.len() as f64;
    let mut mean = vec![0.0; d];
    for v in vs {
        mean.iter_mut().zip(&v.values).for_each(|(m, x)| *m += x / n);
    }
    let mut var = vec![0.0; d];
    for v in vs {
        var.iter_mut()
            .zip(v.values.iter().zip(&mean))
            .for_each(|(s, (x, m))| *s += (x - m) * (x - m) / n);
    }
    let sd = var
        .into_iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, sd)
}

/// Weighted hinge-loss linear classifier trained by dual coordinate descent.
///
/// Minimizes `0.5 |w|^2 + c * sum_i q_i * hinge(y_i (w . z_i + b))` with the
/// bias folded in as a constant unit feature and `q_i = n / (2 n_class)`.
/// Coordinates are visited in index order, so training is deterministic.
pub fn train_classifier(train: &[FeatureVector], c: f64) -> Result<TrainedClassifier, ClassifyError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifyError::InvalidC(c));
    }
    let n_t = train.iter().filter(|v| v.is_target).count();
    let n_n = train.len() - n_t;
    if n_t == 0 || n_n == 0 {
        return Err(ClassifyError::SingleClass);
    }
    let d = train[0].values.len();
    if let Some(v) = train.iter().find(|v| v.values.len() != d) {
        return Err(ClassifyError::DimensionMismatch {
            expected: d,
            got: v.values.len(),
        });
    }
    if train.iter().any(|v| v.values.iter().any(|x| !x.is_finite())) {
        return Err(ClassifyError::NonFinite);
    }
    let n = train.len();
    let class_weights = (n as f64 / (2.0 * n_t as f64), n as f64 / (2.0 * n_n as f64));
    let (mean, sd) = standardization(train, d);

    // rows of [z, 1]
    let dim = d + 1;
    let mut x = vec![0.0; n * dim];
    for (i, v) in train.iter().enumerate() {
        let row = &mut x[i * dim..(i + 1) * dim];
        for k in 0..d {
            row[k] = (v.values[k] - mean[k]) / sd[k];
        }
        row[d] = 1.0;
    }
    let y: Vec<f64> = train.iter().map(|v| if v.is_target { 1.0 } else { -1.0 }).collect();
    let upper: Vec<f64> = train
        .iter()
        .map(|v| c * if v.is_target { class_weights.0 } else { class_weights.1 })
        .collect();
    let qii: Vec<f64> = (0..n)
        .map(|i| x[i * dim..(i + 1) * dim].iter().map(|a| a * a).sum())
        .collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut passes = 0;
    let mut converged = false;
    while passes < MAX_PASSES {
        passes += 1;
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let row = &x[i * dim..(i + 1) * dim];
            let g = y[i] * row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    w.iter_mut().zip(row).for_each(|(wk, a)| *wk += step * a);
                }
            }
        }
        if pg_max - pg_min < TOLERANCE {
            converged = true;
            break;
        }
    }
    let bias = w[d];
    w.truncate(d);
    Ok(TrainedClassifier {
        weights: w,
        bias,
        c,
        class_weights,
        mean,
        sd,
        passes,
        converged,
    })
}
