use crate::model::{QuantileRow, QUANTILE_LEVELS};
use crate::train::pinball;

/// Miss rate of the nominal 90% interval.
pub const ALPHA_90: f64 = 0.10;

fn check(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len(), "metric inputs must be aligned");
    assert!(!a.is_empty(), "metric inputs must be non-empty");
}

fn mean_of(it: impl Iterator<Item = f64>, n: usize) -> f64 {
    it.sum::<f64>() / n as f64
}

pub fn rmse(actual: &[f64], point: &[f64]) -> f64 {
    check(actual, point);
    mean_of(actual.iter().zip(point).map(|(y, f)| (y - f).powi(2)), actual.len()).sqrt()
}

/// Symmetric MAPE in percent (0–200 scale). A pair of exact zeros counts as 0.
pub fn smape(actual: &[f64], point: &[f64]) -> f64 {
    check(actual, point);
    100.0
        * mean_of(
            actual.iter().zip(point).map(|(y, f)| {
                let d = y.abs() + f.abs();
                if d == 0.0 {
                    0.0
                } else {
                    2.0 * (y - f).abs() / d
                }
            }),
            actual.len(),
        )
}

/// RMSE scaled by the in-sample RMS one-step change of `training`. `None`
/// when the scale is zero or undefined.
pub fn rmsse(actual: &[f64], point: &[f64], training: &[f64]) -> Option<f64> {
    check(actual, point);
    if training.len() < 2 {
        return None;
    }
    let scale = mean_of(
        training.windows(2).map(|w| (w[1] - w[0]).powi(2)),
        training.len() - 1,
    );
    if scale <= 0.0 {
        return None;
    }
    let mse = mean_of(actual.iter().zip(point).map(|(y, f)| (y - f).powi(2)), actual.len());
    Some((mse / scale).sqrt())
}

/// Quantile-average CRPS approximation `(2/|Q|) Σ_τ pinball(y, q_τ, τ)`.
pub fn crps_q(actual: f64, quantiles: &[f64], levels: &[f64]) -> f64 {
    assert_eq!(quantiles.len(), levels.len());
    2.0 / levels.len() as f64
        * quantiles
            .iter()
            .zip(levels)
            .map(|(&q, &tau)| pinball(actual, q, tau))
            .sum::<f64>()
}

/// Mean [`crps_q`] over years using the five model levels.
pub fn crps_mean(actual: &[f64], rows: &[QuantileRow]) -> f64 {
    assert_eq!(actual.len(), rows.len());
    mean_of(
        actual.iter().zip(rows).map(|(&y, r)| crps_q(y, r, &QUANTILE_LEVELS)),
        actual.len(),
    )
}

/// Percent of years with `lo ≤ y ≤ hi`.
pub fn coverage(actual: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    check(actual, lo);
    check(actual, hi);
    let inside = actual
        .iter()
        .zip(lo.iter().zip(hi))
        .filter(|(y, (l, u))| *l <= *y && *y <= *u)
        .count();
    100.0 * inside as f64 / actual.len() as f64
}

pub fn mpiw(lo: &[f64], hi: &[f64]) -> f64 {
    check(lo, hi);
    mean_of(lo.iter().zip(hi).map(|(l, u)| u - l), lo.len())
}

/// Mean interval score at miss rate `alpha`.
pub fn mis(actual: &[f64], lo: &[f64], hi: &[f64], alpha: f64) -> f64 {
    check(actual, lo);
    check(actual, hi);
    mean_of(
        actual.iter().zip(lo.iter().zip(hi)).map(|(&y, (&l, &u))| {
            let mut s = u - l;
            if y < l {
                s += 2.0 / alpha * (l - y);
            }
            if y > u {
                s += 2.0 / alpha * (y - u);
            }
            s
        }),
        actual.len(),
    )
}
