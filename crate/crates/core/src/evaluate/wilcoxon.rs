use log::warn;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::stats::total_cmp;

/// Largest sample evaluated by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&values[a], &values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples `a`, `b`.
/// Zero differences are dropped. Exact null distribution for up to
/// [`EXACT_MAX_N`] pairs, otherwise the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        warn!("all paired differences are zero; p = 1");
        return 1.0;
    }
    if n < 5 {
        warn!("only {n} non-zero differences; the test has little power");
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    if n <= EXACT_MAX_N {
        exact_p(&ranks, w_plus)
    } else {
        normal_p(&abs, n, w_plus)
    }
}

fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    // Doubled ranks are integers even with ties.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: u64 = counts[..=observed].iter().sum();
    let upper: u64 = counts[observed..].iter().sum();
    (2.0 * lower.min(upper) as f64 / all).min(1.0)
}

fn normal_p(abs: &[f64], n: usize, w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    (2.0 * (1.0 - std_normal.cdf(z))).min(1.0)
}
