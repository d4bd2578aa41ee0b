use std::io::Write;
use std::path::Path;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::config::TrainConfig;
use super::loss::{mean_loss, window_loss_and_grad};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::numerics::{step_lr, AdamState, RngStream};
use crate::transform::WindowSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when there is no validation set.
    pub val_loss: Option<f64>,
    pub lr: f64,
    pub tf_prob: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stopped_early: bool,
}

/// Patience counter over per-epoch validation losses. Only strict
/// improvements reset it.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records one check; returns true on a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

/// `max(0, 1 − epoch / decay_epochs)`.
pub fn teacher_forcing_prob(epoch: usize, decay_epochs: usize) -> f64 {
    if decay_epochs == 0 {
        return 0.0;
    }
    (1.0 - epoch as f64 / decay_epochs as f64).max(0.0)
}

/// Trains one model from a fresh initialization drawn from `rng`.
pub fn train_model(
    config: &TrainConfig,
    model: ModelConfig,
    train: &WindowSet,
    validation: &WindowSet,
    rng: &RngStream,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("training window set is empty".into()));
    }
    if validation.is_empty() {
        warn!("no validation windows: early stopping monitors the training loss");
    }
    let mut params = ModelParams::init(model, rng)?;
    let mut adam = AdamState::new(config.adam(), params.tensors());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut stopped_early = false;
    let n = train.len();

    for epoch in 0..config.max_epochs {
        let lr = step_lr(epoch, config.lr, config.lr_step, config.lr_gamma);
        adam.set_lr(lr);
        let tf_prob = teacher_forcing_prob(epoch, config.tf_decay_epochs);
        let mut order: Vec<usize> = (0..n).collect();
        rng.derive_indexed("shuffle", epoch as u64).shuffle(&mut order);
        let tf_rng = rng.derive_indexed("teacher", epoch as u64);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| {
                    let mut r = tf_rng.derive_indexed("window", i as u64);
                    window_loss_and_grad(&params, &train.samples[i], tf_prob, &mut r)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grad = params.zeros_like();
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss;
                grad.add_scaled(g, 1.0);
            }
            grad.scale(1.0 / batch.len() as f64);
            if !batch_loss.is_finite() || !grad.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("non-finite training loss {batch_loss}"),
                });
            }
            epoch_loss += batch_loss;
            let grads = grad.tensors();
            adam.step(&mut params.tensors_mut(), &grads);
        }
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "parameters became non-finite".into(),
            });
        }
        let train_loss = epoch_loss / n as f64;
        let val_loss = if validation.is_empty() {
            None
        } else {
            Some(mean_loss(&params, &validation.samples)?)
        };
        let monitored = val_loss.unwrap_or(train_loss);
        if !monitored.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: format!("non-finite validation loss {monitored}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
            tf_prob,
        });
        debug!("epoch {epoch}: train {train_loss:.5} val {monitored:.5} lr {lr:e} tf {tf_prob:.3}");
        if stopper.observe(epoch, monitored) {
            best.clone_from(&params);
        }
        if stopper.should_stop() {
            stopped_early = true;
            break;
        }
    }
    let (best_epoch, best_loss) = stopper.best();
    info!(
        "training finished after {} epochs, best epoch {best_epoch} (loss {best_loss:.5})",
        history.len()
    );
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        best_loss,
        stopped_early,
    })
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,lr,tf_prob";

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let val = r.val_loss.map(|v| format!("{v:?}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{},{:?},{:?}\n",
            r.epoch, r.train_loss, val, r.lr, r.tf_prob
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use crate::transform::WindowSample;

    #[test]
    fn improving_every_epoch_never_stops() {
        let mut s = EarlyStopping::new(8);
        for e in 0..100 {
            assert!(s.observe(e, 100.0 - e as f64));
            assert!(!s.should_stop());
        }
    }

    #[test]
    fn frozen_loss_stops_after_patience_checks() {
        let mut s = EarlyStopping::new(8);
        s.observe(0, 1.0);
        for e in 1..=8 {
            assert!(!s.should_stop());
            assert!(!s.observe(e, 1.0));
        }
        assert!(s.should_stop());
        assert_eq!(s.best(), (0, 1.0));
    }

    #[test]
    fn teacher_forcing_schedule() {
        assert_eq!(teacher_forcing_prob(0, 20), 1.0);
        assert_eq!(teacher_forcing_prob(10, 20), 0.5);
        assert_eq!(teacher_forcing_prob(25, 20), 0.0);
        assert_eq!(teacher_forcing_prob(3, 0), 0.0);
    }

    fn toy_windows(n: usize, seed: u64) -> WindowSet {
        let mut r = RngStream::new(seed);
        let mut set = WindowSet::empty(8, 3);
        for i in 0..n {
            let level = r.uniform_range(-1.0, 1.0);
            set.samples.push(WindowSample {
                country_id: i % 2,
                origin_year: 1990 + i as i32,
                encoder_input: Matrix::from_fn(8, 4, |_, _| level + 0.05 * r.normal()),
                target: vec![level - 0.1, level - 0.2, level - 0.3],
                augmented: false,
            });
        }
        set
    }

    fn toy_config() -> (TrainConfig, ModelConfig) {
        let cfg = TrainConfig {
            l_enc: 8,
            l_pred: 3,
            d_emb: 2,
            hidden_dim: 6,
            n_layers: 1,
            batch_size: 2,
            lr: 1e-2,
            max_epochs: 30,
            tf_decay_epochs: 5,
            ..TrainConfig::default()
        };
        let m = cfg.model_config(2);
        (cfg, m)
    }

    #[test]
    fn training_reduces_loss_on_toy_problem() {
        let (cfg, m) = toy_config();
        let train = toy_windows(5, 1);
        let out = train_model(&cfg, m, &train, &WindowSet::empty(8, 3), &RngStream::new(2)).unwrap();
        let h = &out.history;
        assert!(h.last().unwrap().train_loss < h[0].train_loss);
        let best = h.iter().map(|r| r.train_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_loss, best);
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let (mut cfg, m) = toy_config();
        cfg.max_epochs = 6;
        let train = toy_windows(7, 3);
        let val = toy_windows(3, 4);
        let a = train_model(&cfg, m, &train, &val, &RngStream::new(5)).unwrap();
        let b = train_model(&cfg, m, &train, &val, &RngStream::new(5)).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
        let c = train_model(&cfg, m, &train, &val, &RngStream::new(6)).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn best_parameters_reproduce_best_validation_loss() {
        let (mut cfg, m) = toy_config();
        cfg.max_epochs = 12;
        let train = toy_windows(7, 7);
        let val = toy_windows(3, 8);
        let out = train_model(&cfg, m, &train, &val, &RngStream::new(9)).unwrap();
        let recorded: Vec<f64> = out.history.iter().filter_map(|r| r.val_loss).collect();
        let min = recorded.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_loss, min);
        assert_eq!(mean_loss(&out.params, &val.samples).unwrap(), min);
    }

    #[test]
    fn non_finite_inputs_abort_with_divergence() {
        let (cfg, m) = toy_config();
        let mut train = toy_windows(5, 1);
        train.samples[2].target[1] = f64::NAN;
        let e = train_model(&cfg, m, &train, &toy_windows(2, 2), &RngStream::new(1)).unwrap_err();
        assert_eq!(e.category(), "divergence");
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let (cfg, m) = toy_config();
        let e = WindowSet::empty(8, 3);
        assert!(train_model(&cfg, m, &e, &e, &RngStream::new(1)).is_err());
    }
}
