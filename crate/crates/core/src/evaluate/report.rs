use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::metrics::{coverage, crps_mean, mis, mpiw, rmse, rmsse, smape, ALPHA_90};
use super::wilcoxon::wilcoxon_signed_rank;
use crate::error::{Error, Result};
use crate::model::QuantileRow;
use crate::stats::{median, quantile_linear};

pub const METRICS: [&str; 7] = ["rmse", "smape", "rmsse", "crps", "coverage90", "mpiw90", "mis90"];
pub const SCORES_HEADER: &str = "country,model,rmse,smape,rmsse,crps,coverage90,mpiw90,mis90";
pub const SUMMARY_HEADER: &str = "metric,model,n,median,q1,q3,rank,p_vs_next";

/// Held-out scores of one model on one country, in natural TFR units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryScores {
    pub country: String,
    pub model: String,
    pub rmse: f64,
    pub smape: f64,
    /// `None` for a constant training series.
    pub rmsse: Option<f64>,
    pub crps: f64,
    pub coverage90: f64,
    pub mpiw90: f64,
    pub mis90: f64,
}

impl CountryScores {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "rmse" => Some(self.rmse),
            "smape" => Some(self.smape),
            "rmsse" => self.rmsse,
            "crps" => Some(self.crps),
            "coverage90" => Some(self.coverage90),
            "mpiw90" => Some(self.mpiw90),
            "mis90" => Some(self.mis90),
            _ => None,
        }
    }
}

/// Scores a quantile forecast (`rows[k]` for `actual[k]`) against the
/// held-out values. The point forecast is the median column.
pub fn score_country(
    country: &str,
    model: &str,
    actual: &[f64],
    rows: &[QuantileRow],
    training: &[f64],
) -> Result<CountryScores> {
    if actual.is_empty() || actual.len() != rows.len() {
        return Err(Error::Shape(format!(
            "{country}/{model}: {} actuals for {} forecast rows",
            actual.len(),
            rows.len()
        )));
    }
    let point: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let lo: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let hi: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let scale = rmsse(actual, &point, training);
    if scale.is_none() {
        log::warn!("{country}: constant training series, excluded from rmsse");
    }
    Ok(CountryScores {
        country: country.to_string(),
        model: model.to_string(),
        rmse: rmse(actual, &point),
        smape: smape(actual, &point),
        rmsse: scale,
        crps: crps_mean(actual, rows),
        coverage90: coverage(actual, &lo, &hi),
        mpiw90: mpiw(&lo, &hi),
        mis90: mis(actual, &lo, &hi, ALPHA_90),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: String,
    pub model: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// 1 = best. Coverage ranks by distance from 90.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedTest {
    pub metric: String,
    pub best: String,
    pub second: String,
    pub n: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MetricReport {
    pub summaries: Vec<MetricSummary>,
    pub tests: Vec<PairedTest>,
}

fn loss_view(metric: &str, v: f64) -> f64 {
    if metric == "coverage90" {
        (v - 90.0).abs()
    } else {
        v
    }
}

/// Per-metric distribution summaries over the countries every model has a
/// value for, and a paired test between the two best models.
pub fn summarize(scores: &[CountryScores]) -> Result<MetricReport> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to summarize".into()));
    }
    let models: BTreeSet<&str> = scores.iter().map(|s| s.model.as_str()).collect();
    let mut report = MetricReport::default();
    for metric in METRICS {
        let mut table: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for s in scores {
            if let Some(v) = s.metric(metric) {
                table.entry(s.country.as_str()).or_default().insert(s.model.as_str(), v);
            }
        }
        let common: Vec<&str> = table
            .iter()
            .filter(|(_, m)| m.len() == models.len())
            .map(|(c, _)| *c)
            .collect();
        if common.is_empty() {
            log::warn!("{metric}: no country is scored by every model");
            continue;
        }
        let columns: Vec<(&str, Vec<f64>)> = models
            .iter()
            .map(|m| (*m, common.iter().map(|c| table[c][m]).collect()))
            .collect();
        let mut ranked: Vec<(f64, &str, &Vec<f64>)> = columns
            .iter()
            .map(|(m, v)| (loss_view(metric, median(v)), *m, v))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        for (rank, (_, model, values)) in ranked.iter().enumerate() {
            report.summaries.push(MetricSummary {
                metric: metric.to_string(),
                model: model.to_string(),
                n: values.len(),
                median: median(values),
                q1: quantile_linear(values, 0.25),
                q3: quantile_linear(values, 0.75),
                rank: rank + 1,
            });
        }
        if ranked.len() >= 2 && common.len() >= 2 {
            let view = |v: &Vec<f64>| v.iter().map(|x| loss_view(metric, *x)).collect::<Vec<_>>();
            report.tests.push(PairedTest {
                metric: metric.to_string(),
                best: ranked[0].1.to_string(),
                second: ranked[1].1.to_string(),
                n: common.len(),
                p_value: wilcoxon_signed_rank(&view(ranked[0].2), &view(ranked[1].2)),
            });
        }
    }
    Ok(report)
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_scores(path: &Path, scores: &[CountryScores]) -> Result<()> {
    let mut out = format!("{SCORES_HEADER}\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.country,
            s.model,
            fmt(s.rmse),
            fmt(s.smape),
            s.rmsse.map(fmt).unwrap_or_default(),
            fmt(s.crps),
            fmt(s.coverage90),
            fmt(s.mpiw90),
            fmt(s.mis90)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_summary(path: &Path, report: &MetricReport) -> Result<()> {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in &report.summaries {
        let p = report
            .tests
            .iter()
            .find(|t| t.metric == s.metric && t.best == s.model)
            .map(|t| fmt(t.p_value))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.metric,
            s.model,
            s.n,
            fmt(s.median),
            fmt(s.q1),
            fmt(s.q3),
            s.rank,
            p
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
