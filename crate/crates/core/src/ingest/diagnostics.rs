use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{AnnualSeries, CellFlag, RawReport};
use crate::stats::{median, quantile_linear, sample_sd};

/// Series-level quality diagnostics, computed before smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    /// Missing interior years over the number of interior years.
    pub gap_fraction: f64,
    /// Median over years of the within-year sample SD across reports.
    pub source_dispersion: f64,
    /// Sample SD of first differences of the annual series.
    pub volatility: f64,
}

impl SeriesDiagnostics {
    pub fn as_array(&self) -> [f64; 3] {
        [self.gap_fraction, self.source_dispersion, self.volatility]
    }
}

/// `reports` should be the country's reports (others are ignored);
/// `series` is the interpolated, unsmoothed annual series.
pub fn compute_diagnostics(reports: &[RawReport], series: &AnnualSeries) -> SeriesDiagnostics {
    let interior = (series.len() as i64 - 2).max(0);
    let interpolated = series
        .flags
        .iter()
        .filter(|f| **f == CellFlag::Interpolated)
        .count();
    let gap_fraction = if interior == 0 {
        0.0
    } else {
        interpolated as f64 / interior as f64
    };

    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.country_code == series.country_code) {
        by_year.entry(r.year).or_default().push(r.tfr);
    }
    let sds: Vec<f64> = by_year.values().map(|v| sample_sd(v)).collect();
    let source_dispersion = if sds.is_empty() { 0.0 } else { median(&sds) };

    let diffs: Vec<f64> = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    let volatility = sample_sd(&diffs);

    SeriesDiagnostics {
        gap_fraction,
        source_dispersion,
        volatility,
    }
}

/// Upper fences for each diagnostic: `(q3, q3 + 1.5·IQR)`.
pub fn diagnostic_thresholds(diags: &BTreeMap<String, SeriesDiagnostics>) -> [(f64, f64); 3] {
    let mut out = [(0.0, 0.0); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let col: Vec<f64> = diags.values().map(|d| d.as_array()[k]).collect();
        let q1 = quantile_linear(&col, 0.25);
        let q3 = quantile_linear(&col, 0.75);
        *slot = (q3, q3 + 1.5 * (q3 - q1));
    }
    out
}

/// Flags a country when any diagnostic exceeds its `Q3 + 1.5·IQR` fence, or
/// when at least two diagnostics exceed their cross-country 75th percentile.
pub fn flag_outliers(diags: &BTreeMap<String, SeriesDiagnostics>) -> BTreeSet<String> {
    if diags.len() < 4 {
        warn!(
            "outlier rule needs at least 4 series, got {}; nothing flagged",
            diags.len()
        );
        return BTreeSet::new();
    }
    let thresholds = diagnostic_thresholds(diags);
    diags
        .iter()
        .filter(|(_, d)| {
            let vals = d.as_array();
            let iqr_hit = vals.iter().zip(&thresholds).any(|(v, (_, fence))| v > fence);
            let above_p75 = vals.iter().zip(&thresholds).filter(|(v, (q3, _))| *v > q3).count();
            iqr_hit || above_p75 >= 2
        })
        .map(|(c, _)| c.clone())
        .collect()
}
