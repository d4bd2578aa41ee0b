use std::collections::BTreeMap;

use super::{AnnualSeries, CellFlag, RawReport};
use crate::error::{Error, Result};
use crate::stats::median;

pub type YearlyMedians = BTreeMap<i32, f64>;

/// Source ids starting with this prefix mark model-based (non-empirical) estimates.
pub const MODELED_SOURCE_PREFIX: &str = "modeled";

pub fn is_modeled(source_id: &str) -> bool {
    source_id
        .to_ascii_lowercase()
        .starts_with(MODELED_SOURCE_PREFIX)
}

/// Per country and year, the median of all reports for that cell.
pub fn aggregate_medians(reports: &[RawReport]) -> BTreeMap<String, YearlyMedians> {
    let mut cells: BTreeMap<&str, BTreeMap<i32, Vec<f64>>> = BTreeMap::new();
    for r in reports {
        cells
            .entry(r.country_code.as_str())
            .or_default()
            .entry(r.year)
            .or_default()
            .push(r.tfr);
    }
    cells
        .into_iter()
        .map(|(c, years)| {
            let med = years.into_iter().map(|(y, v)| (y, median(&v))).collect();
            (c.to_string(), med)
        })
        .collect()
}

/// Fills interior gaps linearly between the nearest observed neighbours.
/// The series spans exactly the first to last observed year.
pub fn interpolate_gaps(country_code: &str, yearly: &YearlyMedians) -> Result<AnnualSeries> {
    if yearly.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{country_code}: {} observed year(s), need at least 2",
            yearly.len()
        )));
    }
    let obs: Vec<(i32, f64)> = yearly.iter().map(|(&y, &v)| (y, v)).collect();
    let first_year = obs[0].0;
    let mut values = Vec::new();
    let mut flags = Vec::new();
    for pair in obs.windows(2) {
        let (y0, v0) = pair[0];
        let (y1, v1) = pair[1];
        values.push(v0);
        flags.push(CellFlag::Observed);
        let span = f64::from(y1 - y0);
        for y in (y0 + 1)..y1 {
            let w = f64::from(y - y0) / span;
            values.push(v0 + w * (v1 - v0));
            flags.push(CellFlag::Interpolated);
        }
    }
    let (_, last) = obs[obs.len() - 1];
    values.push(last);
    flags.push(CellFlag::Observed);
    Ok(AnnualSeries {
        country_code: country_code.to_string(),
        first_year,
        values,
        flags,
        smoothed: false,
    })
}
