//! Random hyperparameter search scored by validation loss.
//!
//!     cargo run --release --example random_search

use tfrcast::ingest::{harmonize, IngestOptions};
use tfrcast::pipeline::{benchmark_configs, prepare_data, synth_panel, TrainMode};
use tfrcast::numerics::RngStream;
use tfrcast::train::{mean_loss, random_search, train_model, SearchSpace, TrainConfig};

fn main() -> tfrcast::Result<()> {
    let (mut synth, base) = benchmark_configs(5);
    synth.n_countries = 20;
    let base = TrainConfig { max_epochs: 6, members: 1, ..base };
    let panel = harmonize(&synth_panel(&synth), IngestOptions::default())?.panel;
    let prepared = prepare_data(&panel, &base, TrainMode::Holdout)?;

    let space = SearchSpace {
        hidden_dim: vec![16, 32],
        n_layers: vec![1],
        batch_size: vec![16, 32],
        ..SearchSpace::default()
    };
    let (best, trials) = random_search(&space, &base, 4, 9, |cfg| {
        let model = cfg.model_config(prepared.panel.index.len());
        let split = &prepared.split;
        let outcome = train_model(cfg, model, &split.train, &split.validation, &RngStream::new(cfg.seed))?;
        mean_loss(&outcome.params, &split.validation.samples)
    })?;
    for t in &trials {
        println!(
            "trial {}: lr {:.2e} hidden {} batch {} -> val {:.4}",
            t.index, t.config.lr, t.config.hidden_dim, t.config.batch_size, t.val_loss
        );
    }
    println!("chosen: lr {:.2e} hidden {} batch {}", best.lr, best.hidden_dim, best.batch_size);
    Ok(())
}
