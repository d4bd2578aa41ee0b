//! Naive random-walk-with-drift reference forecaster.

use crate::error::{Error, Result};

/// Lower bound applied to every drift forecast, in births per woman.
pub const DRIFT_FLOOR: f64 = 0.05;

/// `y_T + h·d` for `h = 1..=horizon`, with `d` the full-span slope, floored
/// at [`DRIFT_FLOOR`].
pub fn naive_drift(history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if history.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "drift needs at least 2 observations, got {}",
            history.len()
        )));
    }
    let last = history[history.len() - 1];
    let drift = (last - history[0]) / (history.len() - 1) as f64;
    Ok((1..=horizon)
        .map(|h| (last + h as f64 * drift).max(DRIFT_FLOOR))
        .collect())
}
