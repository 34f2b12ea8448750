use super::special::student_t_two_tailed;
use super::StatsError;
use crate::classify::SpellerResult;
use crate::features::{BandFeatureTable, FeatureId};
use std::collections::BTreeMap;

/// Sample Pearson product-moment coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let scale_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let scale_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if sxx <= (1e-13 * scale_x).powi(2) * n as f64 || syy <= (1e-13 * scale_y).powi(2) * n as f64 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-tailed p of a correlation under the t distribution with `n - 2`
/// degrees of freedom. Returns `(p, degenerate)`; `|r| = 1` gives `(0, true)`.
pub fn p_from_r(r: f64, n: usize) -> Result<(f64, bool), StatsError> {
    if n < 3 {
        return Err(StatsError::TooFewSamples(n));
    }
    if !(r.abs() <= 1.0) {
        return Err(StatsError::InvalidCorrelation(r));
    }
    if r.abs() == 1.0 {
        return Ok((0.0, true));
    }
    let df = (n - 2) as f64;
    let t = r * df.sqrt() / (1.0 - r * r).sqrt();
    Ok((student_t_two_tailed(t, df), false))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub feature: FeatureId,
    pub r: f64,
    pub p: f64,
    pub n: usize,
    /// Perfect correlation; `p` is reported as 0.
    pub degenerate: bool,
}

/// Correlations of every feature cell with subjects' best accuracy.
#[derive(Debug, Default)]
pub struct CorrelationTable {
    /// Sorted by ascending p, ties by feature.
    pub results: Vec<CorrelationResult>,
    /// Cells that could not be evaluated.
    pub failures: Vec<(FeatureId, StatsError)>,
}

impl CorrelationTable {
    pub fn get(&self, id: &FeatureId) -> Option<&CorrelationResult> {
        self.results.iter().find(|r| &r.feature == id)
    }
}

/// Correlate each (kind, locus, band) cell against every subject's highest
/// accuracy over sequence counts. Subjects are matched by id.
pub fn correlate_features(
    features: &[BandFeatureTable],
    perf: &[SpellerResult],
) -> Result<CorrelationTable, StatsError> {
    let by_subject: BTreeMap<&str, &SpellerResult> = perf.iter().map(|p| (p.subject_id.as_str(), p)).collect();
    if by_subject.len() != perf.len() || features.len() != perf.len() {
        return Err(StatsError::SubjectMismatch(
            "feature and performance subject sets differ".into(),
        ));
    }
    let mut ys = Vec::with_capacity(features.len());
    for t in features {
        let p = by_subject
            .get(t.subject_id.as_str())
            .ok_or_else(|| StatsError::SubjectMismatch(format!("no performance for subject {}", t.subject_id)))?;
        ys.push(p.best_accuracy());
    }
    if features.len() < 3 {
        return Err(StatsError::TooFewSubjects(features.len()));
    }
    let cells: std::collections::BTreeSet<FeatureId> = features
        .iter()
        .flat_map(|t| t.entries().into_iter().map(|(id, _)| id))
        .collect();
    let mut table = CorrelationTable::default();
    for id in cells {
        let xs: Option<Vec<f64>> = features.iter().map(|t| t.get(&id)).collect();
        let Some(xs) = xs else {
            table.failures.push((
                id,
                StatsError::SubjectMismatch(format!("{id} missing for some subjects")),
            ));
            continue;
        };
        match pearson(&xs, &ys).and_then(|r| p_from_r(r, xs.len()).map(|(p, d)| (r, p, d))) {
            Ok((r, p, degenerate)) => table.results.push(CorrelationResult {
                feature: id,
                r,
                p,
                n: xs.len(),
                degenerate,
            }),
            Err(e) => table.failures.push((id, e)),
        }
    }
    table
        .results
        .sort_by(|a, b| a.p.total_cmp(&b.p).then(a.feature.cmp(&b.feature)));
    Ok(table)
}
