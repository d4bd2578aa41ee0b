//! Raw multi-source fertility reports to one harmonized annual series per
//! country: cell medians, linear interpolation of interior gaps, series
//! diagnostics, the outlier rule and bidirectional EWMA smoothing.

mod diagnostics;
mod harmonize;
mod parse;
mod smoothing;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

pub use diagnostics::{compute_diagnostics, diagnostic_thresholds, flag_outliers, SeriesDiagnostics};
pub use harmonize::{aggregate_medians, interpolate_gaps, is_modeled, YearlyMedians};
pub use parse::{parse_raw, parse_raw_reader, write_raw, RAW_HEADER};
pub(crate) use parse::format_value;
pub use smoothing::{bidirectional_ewma, smooth_series, SMOOTHING_SPAN};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReport {
    pub country_code: String,
    pub year: i32,
    pub tfr: f64,
    pub source_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellFlag {
    Observed,
    Interpolated,
}

impl CellFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CellFlag::Observed => "observed",
            CellFlag::Interpolated => "interpolated",
        }
    }
}

/// Contiguous annual series `first_year..=last_year()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    pub country_code: String,
    pub first_year: i32,
    pub values: Vec<f64>,
    pub flags: Vec<CellFlag>,
    pub smoothed: bool,
}

impl AnnualSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.values.len() as i32 - 1
    }

    pub fn value_at(&self, year: i32) -> Option<f64> {
        if year < self.first_year {
            return None;
        }
        self.values.get((year - self.first_year) as usize).copied()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len() as i32).map(move |i| self.first_year + i)
    }

    pub fn interpolated_count(&self) -> usize {
        self.flags
            .iter()
            .filter(|f| **f == CellFlag::Interpolated)
            .count()
    }

    /// Copy restricted to years `< cutoff` (`None` when nothing remains).
    pub fn truncated_before(&self, cutoff: i32) -> Option<AnnualSeries> {
        let keep = (cutoff - self.first_year).clamp(0, self.values.len() as i32) as usize;
        if keep == 0 {
            return None;
        }
        Some(AnnualSeries {
            values: self.values[..keep].to_vec(),
            flags: self.flags[..keep].to_vec(),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelMetadata {
    pub total_cells: usize,
    pub interpolated_cells: usize,
    pub flagged_series: usize,
    pub smoothed_series: usize,
    pub dropped_countries: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarmonizedPanel {
    pub series: BTreeMap<String, AnnualSeries>,
    pub metadata: PanelMetadata,
}

impl HarmonizedPanel {
    pub fn from_series(series: impl IntoIterator<Item = AnnualSeries>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for s in series {
            if s.is_empty() {
                return Err(Error::InvalidInput(format!("{}: empty series", s.country_code)));
            }
            if s.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "{}: non-positive value in series",
                    s.country_code
                )));
            }
            let code = s.country_code.clone();
            if map.insert(code.clone(), s).is_some() {
                return Err(Error::InvalidInput(format!("duplicate country {code}")));
            }
        }
        let mut panel = HarmonizedPanel {
            series: map,
            metadata: PanelMetadata::default(),
        };
        panel.refresh_counts();
        Ok(panel)
    }

    fn refresh_counts(&mut self) {
        self.metadata.total_cells = self.series.values().map(|s| s.len()).sum();
        self.metadata.interpolated_cells = self.series.values().map(|s| s.interpolated_count()).sum();
        self.metadata.smoothed_series = self.series.values().filter(|s| s.smoothed).count();
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn country_codes(&self) -> Vec<String> {
        self.series.keys().cloned().collect()
    }

    pub fn get(&self, code: &str) -> Option<&AnnualSeries> {
        self.series.get(code)
    }

    pub fn interpolated_share(&self) -> f64 {
        if self.metadata.total_cells == 0 {
            0.0
        } else {
            self.metadata.interpolated_cells as f64 / self.metadata.total_cells as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Apply the outlier smoothing rule (disable for the no-smoothing ablation).
    pub smoothing: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { smoothing: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRow {
    pub country_code: String,
    pub diagnostics: SeriesDiagnostics,
    pub flagged: bool,
    pub smoothed: bool,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub panel: HarmonizedPanel,
    pub diagnostics: Vec<DiagnosticsRow>,
}

/// Full harmonization: drop model-based reports, take cell medians,
/// interpolate, freeze diagnostics, flag outliers and smooth flagged series.
pub fn harmonize(reports: &[RawReport], options: IngestOptions) -> Result<IngestOutput> {
    let empirical: Vec<RawReport> = reports
        .iter()
        .filter(|r| !is_modeled(&r.source_id))
        .cloned()
        .collect();
    let mut dropped: BTreeSet<String> = reports
        .iter()
        .map(|r| r.country_code.clone())
        .collect();

    let medians = aggregate_medians(&empirical);
    let mut series = BTreeMap::new();
    for (code, yearly) in &medians {
        match interpolate_gaps(code, yearly) {
            Ok(s) => {
                dropped.remove(code);
                series.insert(code.clone(), s);
            }
            Err(e) => warn!("excluding {code}: {e}"),
        }
    }
    for code in &dropped {
        if !medians.contains_key(code) {
            warn!("excluding {code}: no empirical observations");
        }
    }

    let mut by_country: BTreeMap<&str, Vec<RawReport>> = BTreeMap::new();
    for r in &empirical {
        by_country.entry(r.country_code.as_str()).or_default().push(r.clone());
    }
    let diags: BTreeMap<String, SeriesDiagnostics> = series
        .iter()
        .map(|(code, s)| {
            let reps = by_country.get(code.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            (code.clone(), compute_diagnostics(reps, s))
        })
        .collect();
    let flagged = flag_outliers(&diags);

    if options.smoothing {
        for code in &flagged {
            if let Some(s) = series.get_mut(code) {
                *s = smooth_series(s);
            }
        }
    }

    let rows = diags
        .iter()
        .map(|(code, d)| DiagnosticsRow {
            country_code: code.clone(),
            diagnostics: *d,
            flagged: flagged.contains(code),
            smoothed: series[code].smoothed,
        })
        .collect();

    let mut panel = HarmonizedPanel::from_series(series.into_values())?;
    panel.metadata.flagged_series = flagged.len();
    panel.metadata.dropped_countries = dropped.into_iter().collect();
    Ok(IngestOutput {
        panel,
        diagnostics: rows,
    })
}

pub const PANEL_HEADER: [&str; 4] = ["country_code", "year", "tfr", "flag"];
pub const DIAGNOSTICS_HEADER: [&str; 6] = [
    "country_code",
    "gap_fraction",
    "source_dispersion",
    "volatility",
    "flagged",
    "smoothed",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::InvalidInput(format!("{}: {e}", path.display()))
}

pub fn write_panel(path: &Path, panel: &HarmonizedPanel) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(PANEL_HEADER).map_err(csv_err(path))?;
    for s in panel.series.values() {
        for (i, (v, f)) in s.values.iter().zip(&s.flags).enumerate() {
            w.write_record([
                s.country_code.as_str(),
                &(s.first_year + i as i32).to_string(),
                &format_value(*v),
                f.as_str(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(DIAGNOSTICS_HEADER).map_err(csv_err(path))?;
    for r in rows {
        let d = r.diagnostics;
        w.write_record([
            r.country_code.as_str(),
            &format_value(d.gap_fraction),
            &format_value(d.source_dispersion),
            &format_value(d.volatility),
            &r.flagged.to_string(),
            &r.smoothed.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a harmonized panel file written by [`write_panel`].
pub fn read_panel(path: &Path) -> Result<HarmonizedPanel> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(&name, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != PANEL_HEADER {
        return Err(Error::parse(&name, 1, format!("expected header `{}`", PANEL_HEADER.join(","))));
    }
    let mut series: BTreeMap<String, AnnualSeries> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(&name, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let year: i32 = rec[1]
            .parse()
            .map_err(|_| Error::parse(&name, line, "bad year"))?;
        let tfr: f64 = rec[2]
            .parse()
            .map_err(|_| Error::parse(&name, line, "bad tfr"))?;
        let flag = match &rec[3] {
            "observed" => CellFlag::Observed,
            "interpolated" => CellFlag::Interpolated,
            other => return Err(Error::parse(&name, line, format!("unknown flag `{other}`"))),
        };
        let s = series.entry(rec[0].to_string()).or_insert_with(|| AnnualSeries {
            country_code: rec[0].to_string(),
            first_year: year,
            values: Vec::new(),
            flags: Vec::new(),
            smoothed: false,
        });
        if year != s.first_year + s.values.len() as i32 {
            return Err(Error::parse(&name, line, "panel years must be contiguous and ascending"));
        }
        s.values.push(tfr);
        s.flags.push(flag);
    }
    HarmonizedPanel::from_series(series.into_values())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(c: &str, y: i32, v: f64, s: &str) -> RawReport {
        RawReport {
            country_code: c.into(),
            year: y,
            tfr: v,
            source_id: s.into(),
        }
    }

    #[test]
    fn modeled_only_and_single_year_countries_are_dropped() {
        let reps = vec![
            rep("A", 2000, 2.0, "wpp"),
            rep("A", 2002, 1.8, "wpp"),
            rep("B", 2000, 3.0, "modeled"),
            rep("B", 2001, 3.0, "modeled"),
            rep("C", 2000, 3.0, "wpp"),
        ];
        let out = harmonize(&reps, IngestOptions::default()).unwrap();
        assert_eq!(out.panel.country_codes(), vec!["A".to_string()]);
        assert_eq!(out.panel.metadata.dropped_countries, vec!["B".to_string(), "C".to_string()]);
        assert_eq!(out.panel.metadata.interpolated_cells, 1);
        assert_eq!(out.panel.metadata.total_cells, 3);
    }

    #[test]
    fn interpolation_keeps_observed_values() {
        let reps = vec![
            rep("A", 2000, 2.0, "wpp"),
            rep("A", 2000, 2.2, "dhs"),
            rep("A", 2003, 1.7, "wpp"),
            rep("A", 2004, 1.6, "wpp"),
        ];
        let out = harmonize(&reps, IngestOptions { smoothing: false }).unwrap();
        let s = out.panel.get("A").unwrap();
        assert!((s.values[0] - 2.1).abs() < 1e-15);
        assert_eq!(s.values[3], 1.7);
        assert_eq!(s.values[4], 1.6);
        assert_eq!(s.flags[1], CellFlag::Interpolated);
    }

    #[test]
    fn panel_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let p = HarmonizedPanel::from_series([AnnualSeries {
            country_code: "A".into(),
            first_year: 1990,
            values: vec![2.0, 1.9 + 1e-13, 1.8],
            flags: vec![CellFlag::Observed, CellFlag::Interpolated, CellFlag::Observed],
            smoothed: false,
        }])
        .unwrap();
        write_panel(&path, &p).unwrap();
        let q = read_panel(&path).unwrap();
        assert_eq!(p.series, q.series);
        assert_eq!(q.metadata.interpolated_cells, 1);
    }

    #[test]
    fn truncation() {
        let s = AnnualSeries {
            country_code: "A".into(),
            first_year: 2005,
            values: vec![1.0, 2.0, 3.0, 4.0],
            flags: vec![CellFlag::Observed; 4],
            smoothed: false,
        };
        assert_eq!(s.truncated_before(2007).unwrap().values, vec![1.0, 2.0]);
        assert!(s.truncated_before(2005).is_none());
        assert_eq!(s.truncated_before(2050).unwrap().len(), 4);
    }
}
