use super::AnnualSeries;

pub const SMOOTHING_SPAN: f64 = 5.0;

/// Average of a forward and a backward EWMA with `α = 2/(span+1)`, each
/// started at the first value in its direction.
pub fn bidirectional_ewma(values: &[f64], span: f64) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let alpha = 2.0 / (span + 1.0);
    let mut fwd = vec![0.0; n];
    fwd[0] = values[0];
    for i in 1..n {
        fwd[i] = alpha * values[i] + (1.0 - alpha) * fwd[i - 1];
    }
    let mut bwd = vec![0.0; n];
    bwd[n - 1] = values[n - 1];
    for i in (0..n - 1).rev() {
        bwd[i] = alpha * values[i] + (1.0 - alpha) * bwd[i + 1];
    }
    fwd.iter().zip(&bwd).map(|(f, b)| 0.5 * (f + b)).collect()
}

pub fn smooth_series(series: &AnnualSeries) -> AnnualSeries {
    AnnualSeries {
        values: bidirectional_ewma(&series.values, SMOOTHING_SPAN),
        smoothed: true,
        ..series.clone()
    }
}
