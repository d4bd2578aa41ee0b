use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::TrainConfig;
use super::trainer::{train_model, TrainOutcome};
use crate::error::{Error, Result};
use crate::model::{forward, rearrange_quantiles, ForecastGrid, ModelParams};
use crate::numerics::{Matrix, RngStream};
use crate::stats::median;
use crate::transform::WindowSet;

const LR_CYCLE: [f64; 3] = [0.8, 1.0, 1.25];
const HIDDEN_CYCLE: [isize; 4] = [0, 8, 0, -8];

/// Hyperparameters of one ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemberSpec {
    pub index: usize,
    pub seed: u64,
    pub lr: f64,
    pub hidden_dim: usize,
}

impl MemberSpec {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            lr: self.lr,
            hidden_dim: self.hidden_dim,
            ..base.clone()
        }
    }
}

/// Member `i`: seed `base + i`, lr scaled by 0.8/1.0/1.25 cycling, hidden
/// size offset by 0/+8/0/−8 cycling.
pub fn member_specs(base: &TrainConfig) -> Vec<MemberSpec> {
    (0..base.members)
        .map(|i| MemberSpec {
            index: i,
            seed: base.seed.wrapping_add(i as u64),
            lr: base.lr * LR_CYCLE[i % LR_CYCLE.len()],
            hidden_dim: (base.hidden_dim as isize + HIDDEN_CYCLE[i % HIDDEN_CYCLE.len()]).max(1)
                as usize,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainedMember {
    pub spec: MemberSpec,
    pub outcome: TrainOutcome,
}

/// Trains one member. Depends only on its own spec, never on other members.
pub fn train_member(
    base: &TrainConfig,
    spec: MemberSpec,
    n_countries: usize,
    train: &WindowSet,
    validation: &WindowSet,
) -> Result<TrainedMember> {
    let cfg = spec.apply(base);
    let model = cfg.model_config(n_countries);
    let outcome = train_model(&cfg, model, train, validation, &RngStream::new(spec.seed)).map_err(
        |e| Error::Member {
            index: spec.index,
            source: Box::new(e),
        },
    )?;
    info!(
        "member {} (seed {}, lr {:e}, hidden {}): best epoch {}",
        spec.index, spec.seed, spec.lr, spec.hidden_dim, outcome.best_epoch
    );
    Ok(TrainedMember { spec, outcome })
}

/// Trains all members, in parallel when the thread pool allows.
pub fn train_ensemble(
    base: &TrainConfig,
    n_countries: usize,
    train: &WindowSet,
    validation: &WindowSet,
) -> Result<Vec<TrainedMember>> {
    member_specs(base)
        .into_par_iter()
        .map(|spec| train_member(base, spec, n_countries, train, validation))
        .collect()
}

/// Cellwise median over member grids, then quantile rearrangement.
pub fn combine_grids(grids: &[ForecastGrid]) -> Result<ForecastGrid> {
    let first = grids
        .first()
        .ok_or_else(|| Error::InvalidInput("no ensemble members".into()))?;
    if grids.iter().any(|g| g.len() != first.len()) {
        return Err(Error::Shape("member grids differ in length".into()));
    }
    let rows = (0..first.len())
        .map(|k| std::array::from_fn(|q| median(&grids.iter().map(|g| g.rows[k][q]).collect::<Vec<_>>())))
        .collect();
    Ok(rearrange_quantiles(&ForecastGrid::new(rows)))
}

pub fn ensemble_forecast(
    members: &[ModelParams],
    encoder_input: &Matrix,
    country_id: usize,
) -> Result<ForecastGrid> {
    let grids = members
        .iter()
        .map(|p| forward(p, encoder_input, country_id))
        .collect::<Result<Vec<_>>>()?;
    combine_grids(&grids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jitter_table_for_default_base() {
        let specs = member_specs(&TrainConfig::default());
        assert_eq!(specs.len(), 10);
        let lr: Vec<f64> = specs.iter().map(|s| s.lr).collect();
        let expected_lr = [0.8e-3, 1e-3, 1.25e-3, 0.8e-3, 1e-3, 1.25e-3, 0.8e-3, 1e-3, 1.25e-3, 0.8e-3];
        for (a, b) in lr.iter().zip(expected_lr) {
            assert!((a - b).abs() < 1e-18);
        }
        let hidden: Vec<usize> = specs.iter().map(|s| s.hidden_dim).collect();
        assert_eq!(hidden, [64, 72, 64, 56, 64, 72, 64, 56, 64, 72]);
        let seeds: Vec<u64> = specs.iter().map(|s| s.seed).collect();
        assert_eq!(seeds, (42..52).collect::<Vec<_>>());
        let mut triples: Vec<(u64, u64, usize)> =
            specs.iter().map(|s| (s.seed, s.lr.to_bits(), s.hidden_dim)).collect();
        triples.dedup();
        assert_eq!(triples.len(), 10);
    }

    #[test]
    fn even_member_count_median() {
        let grids: Vec<ForecastGrid> = (1..=10)
            .map(|v| ForecastGrid::new(vec![[v as f64; 5]]))
            .collect();
        assert_eq!(combine_grids(&grids).unwrap().rows[0], [5.5; 5]);
        let same = vec![grids[3].clone(); 4];
        assert_eq!(combine_grids(&same).unwrap(), grids[3]);
        assert!(combine_grids(&[]).is_err());
    }

    proptest! {
        #[test]
        fn combination_matches_sort_oracle(
            cells in prop::collection::vec(prop::array::uniform5(-3.0f64..3.0), 10)
        ) {
            let grids: Vec<ForecastGrid> = cells.iter().map(|r| ForecastGrid::new(vec![*r])).collect();
            let combined = combine_grids(&grids).unwrap();
            let mut oracle = [0.0; 5];
            for q in 0..5 {
                let mut col: Vec<f64> = cells.iter().map(|r| r[q]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                oracle[q] = (col[4] + col[5]) / 2.0;
            }
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(combined.rows[0], oracle);
            let mut rev = grids.clone();
            rev.reverse();
            prop_assert_eq!(combine_grids(&rev).unwrap(), combined);
        }
    }
}
