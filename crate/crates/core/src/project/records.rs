use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::format_value;
use crate::model::QuantileRow;

pub const FORECAST_HEADER: [&str; 8] =
    ["country_code", "model", "year", "q05", "q10", "q50", "q90", "q95"];

/// One projected year of one country under one model, natural TFR units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRecord {
    pub country_code: String,
    pub model: String,
    pub year: i32,
    pub quantiles: QuantileRow,
}

impl ForecastRecord {
    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }

    pub fn is_monotone(&self) -> bool {
        self.quantiles.windows(2).all(|w| w[0] <= w[1])
    }

    /// Point-only record: every quantile column holds `value`.
    pub fn point(country_code: &str, model: &str, year: i32, value: f64) -> Self {
        ForecastRecord {
            country_code: country_code.to_string(),
            model: model.to_string(),
            year,
            quantiles: [value; 5],
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::InvalidInput(format!("{}: {e}", path.display()))
}

pub fn write_forecasts(path: &Path, records: &[ForecastRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(FORECAST_HEADER).map_err(csv_err(path))?;
    for r in records {
        let mut row = vec![r.country_code.clone(), r.model.clone(), r.year.to_string()];
        row.extend(r.quantiles.iter().map(|v| format_value(*v)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_forecasts_reader<R: std::io::Read>(reader: R, name: &str) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(name, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != FORECAST_HEADER {
        return Err(Error::parse(
            name,
            1,
            format!("expected header `{}`", FORECAST_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(name, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let year: i32 = rec[2]
            .parse()
            .map_err(|_| Error::parse(name, line, format!("bad year `{}`", &rec[2])))?;
        let mut q = [0.0; 5];
        for (i, v) in q.iter_mut().enumerate() {
            *v = rec[3 + i]
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::parse(name, line, format!("bad {} `{}`", FORECAST_HEADER[3 + i], &rec[3 + i])))?;
        }
        let r = ForecastRecord {
            country_code: rec[0].to_string(),
            model: rec[1].to_string(),
            year,
            quantiles: q,
        };
        if r.country_code.is_empty() || r.model.is_empty() {
            return Err(Error::parse(name, line, "empty country_code or model"));
        }
        if !r.is_monotone() {
            return Err(Error::parse(name, line, "quantiles are not non-decreasing"));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn read_forecasts(path: &Path) -> Result<Vec<ForecastRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_forecasts_reader(file, &path.display().to_string())
}

/// Loads comparator files and merges them with their model tags intact.
pub fn load_comparators(paths: &[impl AsRef<Path>]) -> Result<Vec<ForecastRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_forecasts(p.as_ref())?);
    }
    Ok(out)
}

/// Records grouped by model tag, then by country, years ascending.
pub fn group_by_model(records: &[ForecastRecord]) -> BTreeMap<String, BTreeMap<String, Vec<ForecastRecord>>> {
    let mut out: BTreeMap<String, BTreeMap<String, Vec<ForecastRecord>>> = BTreeMap::new();
    for r in records {
        out.entry(r.model.clone())
            .or_default()
            .entry(r.country_code.clone())
            .or_default()
            .push(r.clone());
    }
    for by_country in out.values_mut() {
        for v in by_country.values_mut() {
            v.sort_by_key(|r| r.year);
        }
    }
    out
}

fn read_two_column<T>(
    path: &Path,
    second: &str,
    mut parse: impl FnMut(&str, &str, u64) -> Result<T>,
) -> Result<BTreeMap<String, T>> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::parse(&name, 1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["country_code", second] {
        return Err(Error::parse(&name, 1, format!("expected header `country_code,{second}`")));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(&name, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let v = parse(&name, &rec[1], line)?;
        if out.insert(rec[0].to_string(), v).is_some() {
            return Err(Error::parse(&name, line, format!("duplicate country `{}`", &rec[0])));
        }
    }
    Ok(out)
}

/// `country_code,weight` with strictly positive weights.
pub fn read_weights(path: &Path) -> Result<BTreeMap<String, f64>> {
    read_two_column(path, "weight", |name, v, line| {
        v.parse::<f64>()
            .ok()
            .filter(|w| w.is_finite() && *w > 0.0)
            .ok_or_else(|| Error::parse(name, line, format!("weight must be positive, got `{v}`")))
    })
}

/// `country_code,region`.
pub fn read_regions(path: &Path) -> Result<BTreeMap<String, String>> {
    read_two_column(path, "region", |name, v, line| {
        if v.is_empty() {
            Err(Error::parse(name, line, "empty region"))
        } else {
            Ok(v.to_string())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "country_code,model,year,q05,q10,q50,q90,q95\n";

    #[test]
    fn two_valid_rows() {
        let text = format!("{HEAD}AAA,wpp,2030,1.5,1.5,1.5,1.5,1.5\nBBB,gbd,2030,1.1,1.2,1.3,1.4,1.5\n");
        let r = read_forecasts_reader(text.as_bytes(), "c.csv").unwrap();
        assert_eq!(r.len(), 2);
        let g = group_by_model(&r);
        assert_eq!(g.keys().collect::<Vec<_>>(), ["gbd", "wpp"]);
    }

    #[test]
    fn non_monotone_row_reports_its_line() {
        let text = format!("{HEAD}AAA,m,2030,1.0,1.1,1.2,1.3,1.4\nAAA,m,2031,1.0,1.3,1.2,1.3,1.4\n");
        let e = read_forecasts_reader(text.as_bytes(), "c.csv").unwrap_err();
        assert!(e.to_string().contains(":3"), "{e}");
        assert_eq!(e.category(), "parse");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let recs = vec![
            ForecastRecord::point("AAA", "drift", 2024, 1.7),
            ForecastRecord {
                country_code: "BBB".into(),
                model: "nn".into(),
                year: 2025,
                quantiles: [0.9, 1.0, 1.1, 1.25, 1.3000000000000003],
            },
        ];
        write_forecasts(&p, &recs).unwrap();
        assert_eq!(read_forecasts(&p).unwrap(), recs);
    }
}
