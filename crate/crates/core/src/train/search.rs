use log::info;
use serde::Serialize;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Seeded random-search space: log-uniform learning rate, discrete choices
/// for the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub lr: (f64, f64),
    pub hidden_dim: Vec<usize>,
    pub n_layers: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lr: (1e-4, 1e-2),
            hidden_dim: vec![32, 64, 128],
            n_layers: vec![1, 2, 3],
            batch_size: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub config: TrainConfig,
    pub val_loss: f64,
}

fn pick<T: Copy>(rng: &mut RngStream, xs: &[T]) -> T {
    xs[rng.below(xs.len() as u64) as usize]
}

/// The `budget` configurations a search with `seed` will evaluate, in order.
pub fn sample_trials(space: &SearchSpace, base: &TrainConfig, budget: usize, seed: u64) -> Vec<TrainConfig> {
    let root = RngStream::new(seed).derive("search");
    (0..budget)
        .map(|i| {
            let mut r = root.derive_indexed("trial", i as u64);
            let (lo, hi) = space.lr;
            TrainConfig {
                lr: (lo.ln() + r.uniform() * (hi.ln() - lo.ln())).exp(),
                hidden_dim: pick(&mut r, &space.hidden_dim),
                n_layers: pick(&mut r, &space.n_layers),
                batch_size: pick(&mut r, &space.batch_size),
                ..base.clone()
            }
        })
        .collect()
}

/// Evaluates every sampled trial with `evaluate` (lower is better) and
/// returns the best config plus all trials. Ties go to the earlier trial;
/// NaN counts as worst.
pub fn random_search<F>(
    space: &SearchSpace,
    base: &TrainConfig,
    budget: usize,
    seed: u64,
    mut evaluate: F,
) -> Result<(TrainConfig, Vec<Trial>)>
where
    F: FnMut(&TrainConfig) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::Config("search budget must be ≥ 1".into()));
    }
    let mut trials = Vec::with_capacity(budget);
    for (index, config) in sample_trials(space, base, budget, seed).into_iter().enumerate() {
        let val_loss = evaluate(&config)?;
        info!("trial {index}: lr {:e} hidden {} layers {} batch {} → {val_loss:.5}",
            config.lr, config.hidden_dim, config.n_layers, config.batch_size);
        trials.push(Trial {
            index,
            config,
            val_loss,
        });
    }
    let key = |t: &Trial| if t.val_loss.is_nan() { f64::INFINITY } else { t.val_loss };
    let best = trials
        .iter()
        .fold(None::<&Trial>, |acc, t| match acc {
            Some(b) if key(b) <= key(t) => Some(b),
            _ => Some(t),
        })
        .expect("budget ≥ 1");
    Ok((best.config.clone(), trials))
}
