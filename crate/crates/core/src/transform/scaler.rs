use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::HarmonizedPanel;
use crate::stats::{mean, population_sd};

/// One global mean/SD pair over log-TFR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalScaler {
    pub mu: f64,
    pub sigma: f64,
}

impl GlobalScaler {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0 && mu.is_finite()) {
            return Err(Error::Degenerate(format!("invalid scaler mu={mu} sigma={sigma}")));
        }
        Ok(GlobalScaler { mu, sigma })
    }

    pub fn standardize(&self, tfr: f64) -> Result<f64> {
        if !(tfr > 0.0) {
            return Err(Error::InvalidInput(format!("non-positive tfr {tfr}")));
        }
        Ok((tfr.ln() - self.mu) / self.sigma)
    }

    pub fn invert(&self, z: f64) -> f64 {
        (z * self.sigma + self.mu).exp()
    }

    pub fn invert_all(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.invert(v)).collect()
    }
}

/// Fits on every log-TFR cell with `year < cutoff` (all cells when `cutoff` is `None`),
/// using the population standard deviation.
pub fn fit_scaler(panel: &HarmonizedPanel, cutoff: Option<i32>) -> Result<GlobalScaler> {
    let cells: Vec<f64> = panel
        .series
        .values()
        .flat_map(|s| s.years().zip(&s.values).map(|(y, v)| (y, *v)).collect::<Vec<_>>())
        .filter(|(y, _)| cutoff.map_or(true, |c| *y < c))
        .map(|(_, v)| v.ln())
        .collect();
    if cells.is_empty() {
        return Err(Error::Degenerate("no training cells to fit the scaler".into()));
    }
    let mu = mean(&cells);
    let sigma = population_sd(&cells);
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("zero variance in training log-TFR".into()));
    }
    GlobalScaler::new(mu, sigma)
}
