use serde::Serialize;

use super::rng::RngStream;

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateCheck {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// Coordinates whose error exceeded the tolerance.
    pub failures: Vec<CoordinateCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.max_rel_error.is_finite()
    }
}

/// Picks up to `n` distinct coordinates out of `0..len`, deterministically.
pub fn sample_coordinates(len: usize, n: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    rng.shuffle(&mut idx);
    idx.truncate(n.min(len));
    idx.sort_unstable();
    idx
}

/// Compares `analytic` against central differences of `loss` on `coords`.
/// Error metric: `|analytic − numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    coords: &[usize],
    step: f64,
    tolerance: f64,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let mut work = params.to_vec();
    let mut max_rel_error: f64 = 0.0;
    let mut failures = Vec::new();
    for &i in coords {
        let orig = work[i];
        work[i] = orig + step;
        let lp = loss(&work);
        work[i] = orig - step;
        let lm = loss(&work);
        work[i] = orig;
        let numeric = (lp - lm) / (2.0 * step);
        let rel_error = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        let rel_error = if rel_error.is_nan() { f64::INFINITY } else { rel_error };
        max_rel_error = max_rel_error.max(rel_error);
        if rel_error >= tolerance {
            failures.push(CoordinateCheck {
                index: i,
                analytic: analytic[i],
                numeric,
                rel_error,
            });
        }
    }
    GradCheckReport {
        checked: coords.len(),
        max_rel_error,
        tolerance,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // L(w) = 0.5 · Σ_i (w·x_i − y_i)²
    fn linear_setup() -> (Vec<[f64; 3]>, Vec<f64>) {
        let xs = vec![[1.0, 2.0, -1.0], [0.5, -0.3, 2.0], [3.0, 0.0, 1.0], [-1.0, 1.0, 1.0]];
        let ys = vec![1.0, -2.0, 0.5, 3.0];
        (xs, ys)
    }

    fn linear_loss(w: &[f64], xs: &[[f64; 3]], ys: &[f64]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let r: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - y;
                0.5 * r * r
            })
            .sum()
    }

    fn linear_grad(w: &[f64], xs: &[[f64; 3]], ys: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; 3];
        for (x, y) in xs.iter().zip(ys) {
            let r: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - y;
            for j in 0..3 {
                g[j] += r * x[j];
            }
        }
        g
    }

    #[test]
    fn linear_quadratic_model_matches_exactly() {
        let (xs, ys) = linear_setup();
        let w = [0.3, -0.7, 1.1];
        let g = linear_grad(&w, &xs, &ys);
        let report = grad_check(|p| linear_loss(p, &xs, &ys), &w, &g, &[0, 1, 2], 1e-5, 1e-9);
        assert!(report.passed(), "{report:?}");
        assert!(report.max_rel_error < 1e-9);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let (xs, ys) = linear_setup();
        let w = [0.3, -0.7, 1.1];
        let mut g = linear_grad(&w, &xs, &ys);
        g[1] += 0.01;
        let report = grad_check(|p| linear_loss(p, &xs, &ys), &w, &g, &[0, 1, 2], 1e-5, 1e-6);
        assert!(!report.passed());
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].index, 1);
    }

    #[test]
    fn coordinate_sampling_is_deterministic_and_distinct() {
        let a = sample_coordinates(100, 20, &mut RngStream::new(1));
        let b = sample_coordinates(100, 20, &mut RngStream::new(1));
        assert_eq!(a, b);
        let mut d = a.clone();
        d.dedup();
        assert_eq!(d.len(), 20);
        assert_eq!(sample_coordinates(5, 20, &mut RngStream::new(1)).len(), 5);
    }
}
