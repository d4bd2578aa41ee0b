//! Small synthetic benchmark: a 60-country, 80-year panel, a three-member
//! ensemble and the drift baseline scored on the held-out years.

use std::time::{Duration, Instant};

use super::stages::{
    holdout_forecasts, holdout_origins, prepare_data, score_records, train_prepared, TrainMode,
    DRIFT_TAG, NEURAL_TAG,
};
use super::synth::{synth_panel, SynthConfig};
use crate::error::Result;
use crate::evaluate::{summarize, CountryScores, MetricReport};
use crate::ingest::{harmonize, IngestOptions};
use crate::stats::median;
use crate::train::TrainConfig;

/// Benchmark settings. The country embedding is off (`d_emb = 0`).
pub fn benchmark_configs(seed: u64) -> (SynthConfig, TrainConfig) {
    let synth = SynthConfig {
        n_countries: 60,
        n_years: 80,
        seed,
        ..SynthConfig::default()
    };
    let train = TrainConfig {
        l_enc: 12,
        l_pred: 15,
        d_emb: 0,
        hidden_dim: 32,
        n_layers: 1,
        batch_size: 32,
        lr: 3e-3,
        max_epochs: 30,
        tf_decay_epochs: 10,
        members: 3,
        seed,
        ..TrainConfig::default()
    };
    (synth, train)
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub scores: Vec<CountryScores>,
    pub report: MetricReport,
    pub members: usize,
    pub elapsed: Duration,
}

impl BenchmarkResult {
    fn model_values(&self, model: &str, f: impl Fn(&CountryScores) -> f64) -> Vec<f64> {
        self.scores.iter().filter(|s| s.model == model).map(f).collect()
    }

    pub fn median_rmse(&self, model: &str) -> f64 {
        median(&self.model_values(model, |s| s.rmse))
    }

    pub fn neural_median_rmse(&self) -> f64 {
        self.median_rmse(NEURAL_TAG)
    }

    pub fn drift_median_rmse(&self) -> f64 {
        self.median_rmse(DRIFT_TAG)
    }

    /// Share of held-out cells inside the neural 90% interval, in percent.
    /// Every country contributes the same horizon, so this is the mean of
    /// the per-country coverages.
    pub fn pooled_coverage(&self) -> f64 {
        let v = self.model_values(NEURAL_TAG, |s| s.coverage90);
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn run_benchmark(synth: &SynthConfig, cfg: &TrainConfig) -> Result<BenchmarkResult> {
    let start = Instant::now();
    let panel = harmonize(&synth_panel(synth), IngestOptions::default())?.panel;
    let prepared = prepare_data(&panel, cfg, TrainMode::Holdout)?;
    let members = train_prepared(&prepared, cfg)?;
    let params: Vec<_> = members.iter().map(|m| m.outcome.params.clone()).collect();

    let origins = holdout_origins(&prepared.panel, cfg.train_cutoff_year, cfg.l_enc);
    let records = holdout_forecasts(&params, &panel, &prepared.panel, &origins, cfg.l_pred)?;
    let scores = score_records(&panel, &records, cfg.train_cutoff_year)?;
    let report = summarize(&scores)?;
    Ok(BenchmarkResult {
        scores,
        report,
        members: members.len(),
        elapsed: start.elapsed(),
    })
}
