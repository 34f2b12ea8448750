//! CSV tables for correlation, regression and permutation results.

use super::{CorrelationResult, PermutationResult, RegressionModel, StatsError};
use crate::features::FeatureKind;
use std::path::Path;

fn file_err(path: &Path, e: impl ToString) -> StatsError {
    StatsError::File {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| file_err(path, e))?;
    w.write_record(header).map_err(|e| file_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| file_err(path, e))?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

fn table(path: &Path, results: &[CorrelationResult], kind: FeatureKind, first: &str) -> Result<(), StatsError> {
    let rows = results
        .iter()
        .filter(|r| r.feature.kind() == kind)
        .map(|r| {
            vec![
                r.feature.locus.to_string(),
                r.feature.band.to_string(),
                format!("{:.6}", r.r),
                format!("{:.6}", r.p),
            ]
        })
        .collect();
    write_rows(path, &[first, "band", "r", "p"], rows)
}

/// Region band-power correlations as `region,band,r,p`.
pub fn write_region_table(path: &Path, results: &[CorrelationResult]) -> Result<(), StatsError> {
    table(path, results, FeatureKind::Psd, "region")
}

/// Region-pair locking correlations as `pair,band,r,p`.
pub fn write_pair_table(path: &Path, results: &[CorrelationResult]) -> Result<(), StatsError> {
    table(path, results, FeatureKind::Plv, "pair")
}

/// `term,coefficient` rows followed by the error summary.
pub fn write_regression_summary(path: &Path, model: &RegressionModel) -> Result<(), StatsError> {
    let mut rows = vec![vec!["intercept".to_string(), format!("{:.6}", model.intercept())]];
    for (id, c) in model.predictor_ids.iter().zip(&model.coefficients[1..]) {
        rows.push(vec![id.clone(), format!("{c:.6}")]);
    }
    rows.push(vec!["mse_loocv".into(), format!("{:.6}", model.mse_loocv)]);
    rows.push(vec!["mse_insample".into(), format!("{:.6}", model.mse_insample)]);
    rows.push(vec!["degenerate".into(), model.degenerate.to_string()]);
    rows.push(vec!["n_subjects".into(), model.n_subjects.to_string()]);
    write_rows(path, &["term", "value"], rows)
}

/// One binned permutation test over subjects.
pub struct MaskRow<'a> {
    pub measure: &'a str,
    pub band: &'a str,
    pub locus: String,
    pub bins_ms: &'a [(f64, f64)],
    pub result: &'a PermutationResult,
}

/// `measure,band,region_or_pair,bin_start_ms,bin_end_ms,statistic,p,significant`.
pub fn write_permutation_masks(path: &Path, rows: &[MaskRow]) -> Result<(), StatsError> {
    let mut out = Vec::new();
    for m in rows {
        for (k, &(s, e)) in m.bins_ms.iter().enumerate() {
            out.push(vec![
                m.measure.to_string(),
                m.band.to_string(),
                m.locus.clone(),
                format!("{s}"),
                format!("{e}"),
                format!("{:.6e}", m.result.statistic[k]),
                format!("{:.6}", m.result.p[k]),
                m.result.significant[k].to_string(),
            ]);
        }
    }
    write_rows(
        path,
        &[
            "measure",
            "band",
            "region_or_pair",
            "bin_start_ms",
            "bin_end_ms",
            "statistic",
            "p",
            "significant",
        ],
        out,
    )
}
