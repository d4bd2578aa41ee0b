use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numerics::AdamConfig;
use crate::transform::{AugmentConfig, SplitSpec};

/// Every tunable of a run. Mirrored one-to-one by the `key=value` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l_enc: usize,
    pub l_pred: usize,
    pub d_emb: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr_step: usize,
    pub lr_gamma: f64,
    /// Teacher forcing falls linearly from 1 to 0 over this many epochs.
    pub tf_decay_epochs: usize,
    pub seed: u64,
    pub members: usize,
    pub validation_years: usize,
    pub train_cutoff_year: i32,
    pub augment_threshold: f64,
    pub augment_recent_windows: usize,
    pub sigma_noise: f64,
    pub smoothing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l_enc: 24,
            l_pred: 15,
            d_emb: 8,
            hidden_dim: 64,
            n_layers: 2,
            batch_size: 64,
            lr: 1e-3,
            weight_decay: 1e-5,
            max_epochs: 100,
            patience: 8,
            lr_step: 10,
            lr_gamma: 0.5,
            tf_decay_epochs: 20,
            seed: 42,
            members: 10,
            validation_years: 10,
            train_cutoff_year: 2009,
            augment_threshold: 1.3,
            augment_recent_windows: 10,
            sigma_noise: 0.01,
            smoothing: true,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.patience < 1 {
            return fail("patience must be ≥ 1");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be ≥ 1");
        }
        if self.members < 1 {
            return fail("members must be ≥ 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if self.weight_decay < 0.0 || self.sigma_noise < 0.0 {
            return fail("weight_decay and sigma_noise must be non-negative");
        }
        if !(self.lr_gamma > 0.0) || self.lr_step == 0 {
            return fail("lr_step must be ≥ 1 and lr_gamma positive");
        }
        if self.l_enc < 7 || self.l_pred < 1 {
            return fail("l_enc must be ≥ 7 and l_pred ≥ 1");
        }
        if self.hidden_dim == 0 || self.n_layers == 0 {
            return fail("hidden_dim and n_layers must be positive");
        }
        Ok(())
    }

    pub fn model_config(&self, n_countries: usize) -> ModelConfig {
        ModelConfig {
            n_countries,
            d_emb: self.d_emb,
            hidden_dim: self.hidden_dim,
            n_layers: self.n_layers,
            l_enc: self.l_enc,
            l_pred: self.l_pred,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_cutoff_year: self.train_cutoff_year,
            validation_years: self.validation_years,
        }
    }

    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            threshold_tfr: self.augment_threshold,
            recent_windows: self.augment_recent_windows,
            sigma_noise: self.sigma_noise,
        }
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "l_enc" => self.l_enc = parse_value(key, v)?,
            "l_pred" => self.l_pred = parse_value(key, v)?,
            "d_emb" => self.d_emb = parse_value(key, v)?,
            "hidden_dim" => self.hidden_dim = parse_value(key, v)?,
            "n_layers" => self.n_layers = parse_value(key, v)?,
            "batch_size" => self.batch_size = parse_value(key, v)?,
            "lr" => self.lr = parse_value(key, v)?,
            "weight_decay" => self.weight_decay = parse_value(key, v)?,
            "max_epochs" => self.max_epochs = parse_value(key, v)?,
            "patience" => self.patience = parse_value(key, v)?,
            "lr_step" => self.lr_step = parse_value(key, v)?,
            "lr_gamma" => self.lr_gamma = parse_value(key, v)?,
            "tf_decay_epochs" => self.tf_decay_epochs = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "members" => self.members = parse_value(key, v)?,
            "validation_years" => self.validation_years = parse_value(key, v)?,
            "train_cutoff_year" => self.train_cutoff_year = parse_value(key, v)?,
            "augment_threshold" => self.augment_threshold = parse_value(key, v)?,
            "augment_recent_windows" => self.augment_recent_windows = parse_value(key, v)?,
            "sigma_noise" => self.sigma_noise = parse_value(key, v)?,
            "smoothing" => self.smoothing = parse_value(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("l_enc", self.l_enc.to_string()),
            ("l_pred", self.l_pred.to_string()),
            ("d_emb", self.d_emb.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("n_layers", self.n_layers.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("weight_decay", format!("{:?}", self.weight_decay)),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.to_string()),
            ("lr_step", self.lr_step.to_string()),
            ("lr_gamma", format!("{:?}", self.lr_gamma)),
            ("tf_decay_epochs", self.tf_decay_epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("members", self.members.to_string()),
            ("validation_years", self.validation_years.to_string()),
            ("train_cutoff_year", self.train_cutoff_year.to_string()),
            ("augment_threshold", format!("{:?}", self.augment_threshold)),
            ("augment_recent_windows", self.augment_recent_windows.to_string()),
            ("sigma_noise", format!("{:?}", self.sigma_noise)),
            ("smoothing", self.smoothing.to_string()),
        ]
    }

    /// Parses `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_config(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
