use crate::error::Result;
use crate::model::{
    backward, forward, forward_with_tape, ForecastGrid, ModelParams, QuantileRow, TeacherForcing,
    QUANTILE_LEVELS,
};
use crate::numerics::RngStream;
use crate::transform::WindowSample;

/// Quantile (pinball) loss `max(τ(y−ŷ), (τ−1)(y−ŷ))`.
pub fn pinball(y: f64, y_hat: f64, tau: f64) -> f64 {
    let u = y - y_hat;
    (tau * u).max((tau - 1.0) * u)
}

/// `∂ pinball / ∂ŷ`, taking `−τ` at the kink.
pub fn pinball_grad(y: f64, y_hat: f64, tau: f64) -> f64 {
    if y - y_hat < 0.0 {
        1.0 - tau
    } else {
        -tau
    }
}

/// Sum of pinball losses over every step and quantile.
pub fn total_loss(targets: &[f64], grid: &ForecastGrid) -> f64 {
    assert_eq!(targets.len(), grid.len(), "targets and grid differ in length");
    targets
        .iter()
        .zip(&grid.rows)
        .map(|(&y, row)| {
            row.iter()
                .zip(QUANTILE_LEVELS)
                .map(|(&q, tau)| pinball(y, q, tau))
                .sum::<f64>()
        })
        .sum()
}

pub fn total_loss_grad(targets: &[f64], grid: &ForecastGrid) -> Vec<QuantileRow> {
    targets
        .iter()
        .zip(&grid.rows)
        .map(|(&y, row)| std::array::from_fn(|q| pinball_grad(y, row[q], QUANTILE_LEVELS[q])))
        .collect()
}

/// Loss of one window and its full parameter gradient.
pub fn window_loss_and_grad(
    params: &ModelParams,
    window: &WindowSample,
    tf_prob: f64,
    rng: &mut RngStream,
) -> Result<(f64, ModelParams)> {
    let tf = TeacherForcing {
        targets: Some(&window.target),
        prob: tf_prob,
        rng: Some(rng),
    };
    let (grid, tape) = forward_with_tape(params, &window.encoder_input, window.country_id, tf)?;
    let loss = total_loss(&window.target, &grid);
    let mut grads = params.zeros_like();
    backward(params, &tape, &total_loss_grad(&window.target, &grid), &mut grads);
    Ok((loss, grads))
}

/// Mean inference-mode loss over `windows`.
pub fn mean_loss(params: &ModelParams, windows: &[WindowSample]) -> Result<f64> {
    use rayon::prelude::*;
    let losses = windows
        .par_iter()
        .map(|w| forward(params, &w.encoder_input, w.country_id).map(|g| total_loss(&w.target, &g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}
