use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::Serialize;

use super::records::{group_by_model, ForecastRecord};
use crate::error::{Error, Result};
use crate::stats::mean;

/// Half-open year intervals `[start, end)` for the weighted-TFR report.
pub const REPORT_INTERVALS: [(i32, i32); 3] = [(2025, 2030), (2030, 2035), (2035, 2040)];
pub const ENDPOINT_YEAR: i32 = 2040;
/// Category edges: `< 1.3`, `[1.3, 1.5)`, `[1.5, 2.1)`, `≥ 2.1`.
pub const THRESHOLDS: [f64; 3] = [1.3, 1.5, 2.1];
pub const CATEGORY_LABELS: [&str; 4] = ["<1.3", "1.3-1.5", "1.5-2.1", ">=2.1"];

/// Weighted mean over countries of each country's mean median in
/// `[start, end)`. Countries without a weight or without years in the
/// interval are left out.
pub fn weighted_tfr(
    records: &[ForecastRecord],
    weights: &BTreeMap<String, f64>,
    interval: (i32, i32),
) -> Option<f64> {
    let mut per_country: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.year >= interval.0 && r.year < interval.1) {
        per_country.entry(&r.country_code).or_default().push(r.median());
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (c, v) in per_country {
        match weights.get(c) {
            Some(w) => {
                num += w * mean(&v);
                den += w;
            }
            None => warn!("{c}: no population weight, excluded from weighted TFR"),
        }
    }
    (den > 0.0).then(|| num / den)
}

pub fn category(value: f64) -> usize {
    THRESHOLDS.iter().take_while(|t| value >= **t).count()
}

/// Median at `endpoint_year`, or at the last projected year before it.
pub fn endpoint_value(records: &[ForecastRecord], endpoint_year: i32) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.year <= endpoint_year)
        .max_by_key(|r| r.year)
        .map(ForecastRecord::median)
}

/// Share of countries per category at the endpoint; sums to 1.
pub fn threshold_shares(records: &[ForecastRecord], endpoint_year: i32) -> [f64; 4] {
    let mut by_country: BTreeMap<&str, Vec<ForecastRecord>> = BTreeMap::new();
    for r in records {
        by_country.entry(&r.country_code).or_default().push(r.clone());
    }
    let mut counts = [0usize; 4];
    let mut n = 0;
    for recs in by_country.values() {
        if let Some(v) = endpoint_value(recs, endpoint_year) {
            counts[category(v)] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return [0.0; 4];
    }
    counts.map(|c| c as f64 / n as f64)
}

pub fn band_label(value: f64) -> &'static str {
    match category(value) {
        0 => "ultra-low",
        1 => "very-low",
        2 => "below-replacement",
        _ => "replacement-or-above",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionalRow {
    pub region: String,
    pub country_code: String,
    /// Endpoint median per model.
    pub values: BTreeMap<String, f64>,
    pub bands: BTreeMap<String, String>,
}

/// Endpoint values of the countries every model covers, grouped by region.
pub fn regional_endpoint_table(
    records: &[ForecastRecord],
    regions: &BTreeMap<String, String>,
    endpoint_year: i32,
) -> Vec<RegionalRow> {
    let grouped = group_by_model(records);
    let mut endpoints: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for (model, by_country) in &grouped {
        for (c, recs) in by_country {
            if let Some(v) = endpoint_value(recs, endpoint_year) {
                endpoints.entry(c.as_str()).or_default().insert(model.as_str(), v);
            }
        }
    }
    let mut rows = Vec::new();
    for (c, vals) in endpoints {
        if vals.len() != grouped.len() {
            let missing: Vec<&str> = grouped.keys().map(String::as_str).filter(|m| !vals.contains_key(m)).collect();
            log::info!("{c}: dropped from regional table, missing {}", missing.join("/"));
            continue;
        }
        let Some(region) = regions.get(c) else {
            log::info!("{c}: dropped from regional table, no region");
            continue;
        };
        rows.push(RegionalRow {
            region: region.clone(),
            country_code: c.to_string(),
            bands: vals.iter().map(|(m, v)| (m.to_string(), band_label(*v).to_string())).collect(),
            values: vals.into_iter().map(|(m, v)| (m.to_string(), v)).collect(),
        });
    }
    rows.sort_by(|a, b| (&a.region, &a.country_code).cmp(&(&b.region, &b.country_code)));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedEntry {
    pub model: String,
    pub interval: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareEntry {
    pub model: String,
    pub shares: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub endpoint_year: i32,
    pub weighted_tfr: Vec<WeightedEntry>,
    pub category_shares: Vec<ShareEntry>,
    pub regional: Vec<RegionalRow>,
}

/// Builds every aggregate over all model tags present in `records`.
pub fn build_report(
    records: &[ForecastRecord],
    weights: Option<&BTreeMap<String, f64>>,
    regions: Option<&BTreeMap<String, String>>,
    endpoint_year: i32,
) -> AggregateReport {
    let models: BTreeSet<&str> = records.iter().map(|r| r.model.as_str()).collect();
    let mut weighted = Vec::new();
    let mut shares = Vec::new();
    for m in &models {
        let recs: Vec<ForecastRecord> = records.iter().filter(|r| r.model == *m).cloned().collect();
        if let Some(w) = weights {
            for iv in REPORT_INTERVALS {
                weighted.push(WeightedEntry {
                    model: m.to_string(),
                    interval: format!("{}-{}", iv.0, iv.1),
                    value: weighted_tfr(&recs, w, iv),
                });
            }
        }
        let s = threshold_shares(&recs, endpoint_year);
        shares.push(ShareEntry {
            model: m.to_string(),
            shares: CATEGORY_LABELS.iter().map(|l| l.to_string()).zip(s).collect(),
        });
    }
    AggregateReport {
        endpoint_year,
        weighted_tfr: weighted,
        category_shares: shares,
        regional: regions
            .map(|r| regional_endpoint_table(records, r, endpoint_year))
            .unwrap_or_default(),
    }
}

pub const AGGREGATE_HEADER: &str = "model,measure,label,value";
pub const REGIONAL_HEADER: &str = "region,country_code,model,endpoint_q50,band";

impl AggregateReport {
    pub fn aggregate_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_HEADER}\n");
        for w in &self.weighted_tfr {
            let v = w.value.map(|v| format!("{v:?}")).unwrap_or_default();
            out.push_str(&format!("{},weighted_tfr,{},{v}\n", w.model, w.interval));
        }
        for s in &self.category_shares {
            for l in CATEGORY_LABELS {
                out.push_str(&format!("{},share_{},{l},{:?}\n", s.model, self.endpoint_year, s.shares[l]));
            }
        }
        out
    }

    pub fn regional_csv(&self) -> String {
        let mut out = format!("{REGIONAL_HEADER}\n");
        for r in &self.regional {
            for (m, v) in &r.values {
                out.push_str(&format!("{},{},{m},{v:?},{}\n", r.region, r.country_code, r.bands[m]));
            }
        }
        out
    }

    /// Writes `aggregate.csv`, `regional.csv` and the `report.json` mirror.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("aggregate.csv", self.aggregate_csv())?;
        put("regional.csv", self.regional_csv())?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
        put("report.json", json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(c: &str, m: &str, y: i32, v: f64) -> ForecastRecord {
        ForecastRecord::point(c, m, y, v)
    }

    fn weights(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(c, w)| (c.to_string(), *w)).collect()
    }

    #[test]
    fn weighted_examples() {
        let r = vec![rec("A", "m", 2026, 2.0), rec("B", "m", 2026, 1.0)];
        assert_eq!(weighted_tfr(&r, &weights(&[("A", 1.0), ("B", 1.0)]), (2025, 2030)), Some(1.5));
        assert_eq!(weighted_tfr(&r, &weights(&[("A", 1.0), ("B", 3.0)]), (2025, 2030)), Some(1.25));
        assert_eq!(weighted_tfr(&r, &weights(&[("A", 1.0)]), (2025, 2030)), Some(2.0));
        assert_eq!(weighted_tfr(&r, &weights(&[("A", 1.0)]), (2030, 2035)), None);
        // 2030 belongs to the next interval.
        let edge = vec![rec("A", "m", 2029, 2.0), rec("A", "m", 2030, 1.0)];
        assert_eq!(weighted_tfr(&edge, &weights(&[("A", 5.0)]), (2025, 2030)), Some(2.0));
    }

    #[test]
    fn category_edges() {
        assert_eq!(category(1.29), 0);
        assert_eq!(category(1.3), 1);
        assert_eq!(category(1.5), 2);
        assert_eq!(category(2.1), 3);
        let all_high: Vec<ForecastRecord> = ["A", "B"].iter().map(|c| rec(c, "m", 2040, 2.5)).collect();
        assert_eq!(threshold_shares(&all_high, 2040), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn endpoint_falls_back_to_last_projected_year() {
        let r = vec![rec("A", "m", 2035, 1.4), rec("A", "m", 2036, 1.6), rec("B", "m", 2040, 1.0), rec("B", "m", 2041, 3.0)];
        assert_eq!(threshold_shares(&r, 2040), [0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn intersection_rule() {
        let recs = vec![
            rec("A", "nn", 2040, 1.2),
            rec("A", "wpp", 2040, 1.6),
            rec("B", "nn", 2040, 2.2),
        ];
        let regions: BTreeMap<String, String> =
            [("A", "East"), ("B", "West")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let rows = regional_endpoint_table(&recs, &regions, 2040);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].country_code, "A");
        assert_eq!(rows[0].bands["nn"], "ultra-low");
        assert_eq!(rows[0].bands["wpp"], "below-replacement");
    }
}
