use serde::{Deserialize, Serialize};

use crate::ingest::RawReport;
use crate::numerics::RngStream;

/// Synthetic raw-report generator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_countries: usize,
    pub n_years: usize,
    pub seed: u64,
    pub last_year: i32,
    /// Additive observation noise SD, births per woman.
    pub noise_sd: f64,
    /// Probability that a country-year has no empirical report.
    pub gap_prob: f64,
    /// Probability that a reported year carries a second empirical source.
    pub dup_prob: f64,
    /// Probability of an extra model-based report (dropped on ingest).
    pub modeled_prob: f64,
    /// Range of the transition steepness `k`.
    pub k_range: (f64, f64),
    /// Range of the transition midpoint year `t0`.
    pub t0_range: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_countries: 60,
            n_years: 80,
            seed: 7,
            last_year: 2023,
            noise_sd: 0.05,
            gap_prob: 0.03,
            dup_prob: 0.1,
            modeled_prob: 0.02,
            k_range: (0.08, 0.25),
            t0_range: (1950.0, 2020.0),
        }
    }
}

/// Logistic transition `floor + (start − floor) / (1 + exp(k (t − t0)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub start: f64,
    pub floor: f64,
    pub k: f64,
    pub t0: f64,
}

impl Transition {
    pub fn value(&self, year: i32) -> f64 {
        self.floor + (self.start - self.floor) / (1.0 + (self.k * (year as f64 - self.t0)).exp())
    }

    pub fn draw(rng: &mut RngStream, k_range: (f64, f64), t0_range: (f64, f64)) -> Self {
        Transition {
            start: rng.uniform_range(4.0, 8.0),
            floor: rng.uniform_range(1.1, 1.9),
            k: rng.uniform_range(k_range.0, k_range.1),
            t0: rng.uniform_range(t0_range.0, t0_range.1),
        }
    }
}

pub fn country_code(i: usize) -> String {
    format!("S{i:03}")
}

/// Country `i`'s transition parameters.
pub fn transition(config: &SynthConfig, i: usize) -> Transition {
    let mut rng = RngStream::new(config.seed).derive_indexed("synth-curve", i as u64);
    Transition::draw(&mut rng, config.k_range, config.t0_range)
}

/// Raw reports for a seeded synthetic panel, rows ordered by country then year.
pub fn synth_panel(config: &SynthConfig) -> Vec<RawReport> {
    let first_year = config.last_year - config.n_years as i32 + 1;
    let root = RngStream::new(config.seed);
    let mut out = Vec::new();
    for i in 0..config.n_countries {
        let curve = transition(config, i);
        let mut rng = root.derive_indexed("synth-obs", i as u64);
        let code = country_code(i);
        for year in first_year..=config.last_year {
            let truth = curve.value(year);
            let gap = rng.bernoulli(config.gap_prob);
            let dup = rng.bernoulli(config.dup_prob);
            let modeled = rng.bernoulli(config.modeled_prob);
            let noisy = |rng: &mut RngStream| {
                if config.noise_sd > 0.0 {
                    (truth + config.noise_sd * rng.normal()).max(0.05)
                } else {
                    truth
                }
            };
            if !gap {
                let v = noisy(&mut rng);
                out.push(report(&code, year, v, "survey-a"));
                if dup {
                    let v = noisy(&mut rng);
                    out.push(report(&code, year, v, "survey-b"));
                }
            }
            if modeled {
                out.push(report(&code, year, truth * 1.2, "modeled-estimate"));
            }
        }
    }
    out
}

fn report(code: &str, year: i32, tfr: f64, source: &str) -> RawReport {
    RawReport {
        country_code: code.to_string(),
        year,
        tfr,
        source_id: source.to_string(),
    }
}
