use std::collections::HashSet;
use std::path::Path;

use log::warn;

use super::RawReport;
use crate::error::{Error, Result};

pub const RAW_HEADER: [&str; 4] = ["country_code", "year", "tfr", "source_id"];

/// Parses a raw reports file (`country_code,year,tfr,source_id`).
///
/// Exact duplicate rows are dropped with a warning; any row with a
/// non-numeric or non-positive rate, or a year outside 1900..=2100, is an
/// error carrying its line number.
pub fn parse_raw(path: &Path) -> Result<Vec<RawReport>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw_reader(file, &path.display().to_string())
}

pub fn parse_raw_reader<R: std::io::Read>(reader: R, name: &str) -> Result<Vec<RawReport>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(name, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != RAW_HEADER {
        return Err(Error::parse(
            name,
            1,
            format!("expected header `{}`", RAW_HEADER.join(",")),
        ));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut duplicates = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(Error::parse(name, line, "expected 4 fields"));
        }
        let country_code = rec[0].to_string();
        if country_code.is_empty() {
            return Err(Error::parse(name, line, "empty country_code"));
        }
        let year: i32 = rec[1]
            .parse()
            .map_err(|_| Error::parse(name, line, format!("bad year `{}`", &rec[1])))?;
        if !(1900..=2100).contains(&year) {
            return Err(Error::parse(name, line, format!("year {year} outside 1900..=2100")));
        }
        let tfr: f64 = rec[2]
            .parse()
            .map_err(|_| Error::parse(name, line, format!("non-numeric tfr `{}`", &rec[2])))?;
        if !(tfr.is_finite() && tfr > 0.0) {
            return Err(Error::parse(name, line, format!("non-positive tfr {tfr}")));
        }
        let source_id = rec[3].to_string();

        let key = (country_code.clone(), year, tfr.to_bits(), source_id.clone());
        if !seen.insert(key) {
            duplicates += 1;
            continue;
        }
        out.push(RawReport {
            country_code,
            year,
            tfr,
            source_id,
        });
    }
    if duplicates > 0 {
        warn!("{name}: dropped {duplicates} exact duplicate rows");
    }
    Ok(out)
}

pub fn write_raw(path: &Path, reports: &[RawReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let io_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(RAW_HEADER).map_err(io_err)?;
    for r in reports {
        w.write_record([
            r.country_code.as_str(),
            &r.year.to_string(),
            &format_value(r.tfr),
            r.source_id.as_str(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Shortest round-trip representation.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v:?}")
}
