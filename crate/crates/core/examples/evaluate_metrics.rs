//! Point and interval scores for a hand-made forecast, plus a paired
//! Wilcoxon test.
//!
//!     cargo run --example evaluate_metrics

use tfrcast::baselines::naive_drift;
use tfrcast::evaluate::{
    coverage, crps_mean, mis, mpiw, rmse, rmsse, smape, wilcoxon_signed_rank, ALPHA_90,
};
use tfrcast::model::QuantileRow;

fn main() -> tfrcast::Result<()> {
    let history = [2.10, 2.02, 1.95, 1.90, 1.84, 1.80, 1.77, 1.73];
    let actual = [1.70, 1.66, 1.64, 1.60, 1.57];
    let rows: Vec<QuantileRow> = [1.71, 1.68, 1.64, 1.61, 1.59]
        .iter()
        .enumerate()
        .map(|(h, &m)| {
            let w = 0.03 * (1.0 + h as f64);
            [m - 1.6 * w, m - 1.2 * w, m, m + 1.2 * w, m + 1.6 * w]
        })
        .collect();
    let median: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let lower: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let upper: Vec<f64> = rows.iter().map(|r| r[4]).collect();

    println!("rmse     {:.4}", rmse(&actual, &median));
    println!("smape    {:.3}%", smape(&actual, &median));
    println!("rmsse    {:?}", rmsse(&actual, &median, &history));
    println!("crps     {:.5}", crps_mean(&actual, &rows));
    println!("cover90  {:.1}%", coverage(&actual, &lower, &upper));
    println!("mpiw90   {:.4}", mpiw(&lower, &upper));
    println!("mis90    {:.4}", mis(&actual, &lower, &upper, ALPHA_90));

    let drift = naive_drift(&history, actual.len())?;
    println!("drift    {:?}", drift.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    println!("drift rmse {:.4}", rmse(&actual, &drift));

    let a = [0.05, 0.08, 0.03, 0.11, 0.07, 0.04, 0.09, 0.06];
    let b = [0.12, 0.10, 0.09, 0.25, 0.06, 0.13, 0.20, 0.15];
    let p = wilcoxon_signed_rank(&a, &b);
    println!("wilcoxon p = {p:.5} over {} paired scores", a.len());
    Ok(())
}
