use log::warn;
use rayon::prelude::*;

use super::records::ForecastRecord;
use crate::error::{Error, Result};
use crate::model::{ModelParams, QuantileRow, MEDIAN_INDEX};
use crate::train::ensemble_forecast;
use crate::transform::{encoder_features, StandardizedPanel, MAX_LAG};

/// `horizon` standardized quantile rows after the end of `z`. Beyond one
/// decode the medians of the previous pass are appended to the history as
/// pseudo-observations and the ensemble is decoded again from the new end.
pub fn chained_forecast(
    members: &[ModelParams],
    z: &[f64],
    country_id: usize,
    horizon: usize,
) -> Result<Vec<QuantileRow>> {
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidInput("no ensemble members".into()))?;
    let (l_enc, l_pred) = (first.config.l_enc, first.config.l_pred);
    if z.len() < l_enc + MAX_LAG {
        return Err(Error::InvalidInput(format!(
            "series of length {} is shorter than one encoder window ({})",
            z.len(),
            l_enc + MAX_LAG
        )));
    }
    let mut history = z.to_vec();
    let mut rows = Vec::with_capacity(horizon);
    while rows.len() < horizon {
        let enc = encoder_features(&history, history.len() - 1, l_enc);
        let grid = ensemble_forecast(members, &enc, country_id)?;
        let take = l_pred.min(horizon - rows.len());
        rows.extend_from_slice(&grid.rows[..take]);
        history.extend(grid.rows.iter().map(|r| r[MEDIAN_INDEX]));
    }
    Ok(rows)
}

/// Forward projections from each country's last observed year through
/// `end_year`, inverted to natural units. Countries too short for one
/// encoder window are skipped with a warning.
pub fn forecast_forward(
    members: &[ModelParams],
    panel: &StandardizedPanel,
    end_year: i32,
    model_tag: &str,
) -> Result<Vec<ForecastRecord>> {
    let scaler = panel.scaler;
    let per_country = panel
        .series
        .par_iter()
        .map(|s| {
            let last = s.last_year();
            if end_year <= last {
                return Ok(Vec::new());
            }
            let horizon = (end_year - last) as usize;
            let rows = match chained_forecast(members, &s.z, s.country_id, horizon) {
                Ok(r) => r,
                Err(Error::InvalidInput(m)) => {
                    warn!("{}: excluded from projection: {m}", s.country_code);
                    return Ok(Vec::new());
                }
                Err(e) => return Err(e),
            };
            Ok(rows
                .iter()
                .enumerate()
                .map(|(h, r)| ForecastRecord {
                    country_code: s.country_code.clone(),
                    model: model_tag.to_string(),
                    year: last + 1 + h as i32,
                    quantiles: r.map(|v| scaler.invert(v)),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ForecastRecord> = per_country.into_iter().flatten().collect();
    debug_assert!(records.iter().all(ForecastRecord::is_monotone));
    Ok(records)
}
