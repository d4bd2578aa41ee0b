//! Trains a three-member ensemble and prints a held-out forecast fan.
//!
//!     cargo run --release --example train_ensemble

use tfrcast::ingest::{harmonize, IngestOptions};
use tfrcast::pipeline::{benchmark_configs, prepare_data, synth_panel, train_prepared, TrainMode};
use tfrcast::train::{ensemble_forecast, member_specs, TrainConfig};

fn main() -> tfrcast::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (mut synth, cfg) = benchmark_configs(3);
    synth.n_countries = 30;
    let cfg = TrainConfig { max_epochs: 15, ..cfg };
    let panel = harmonize(&synth_panel(&synth), IngestOptions::default())?.panel;

    for s in member_specs(&cfg) {
        println!("member {}: seed {} lr {:.2e} hidden {}", s.index, s.seed, s.lr, s.hidden_dim);
    }
    let prepared = prepare_data(&panel, &cfg, TrainMode::Holdout)?;
    let members = train_prepared(&prepared, &cfg)?;
    for m in &members {
        let o = &m.outcome;
        let last = o.history.last().unwrap();
        println!(
            "member {}: {} epochs, best epoch {} val {:.4}, final lr {:.2e}{}",
            m.spec.index,
            o.history.len(),
            o.best_epoch,
            o.best_loss,
            last.lr,
            if o.stopped_early { ", stopped early" } else { "" }
        );
    }

    let params: Vec<_> = members.iter().map(|m| m.outcome.params.clone()).collect();
    let origin = &prepared.split.test[0];
    let scaler = prepared.panel.scaler;
    let grid = ensemble_forecast(&params, &origin.encoder_input, origin.country_id)?;
    let code = prepared.panel.index.code(origin.country_id).unwrap();
    println!("{code} from {}:", origin.origin_year);
    println!("{:>6} {:>7} {:>7} {:>7} {:>7} {:>7}", "year", "q05", "q10", "q50", "q90", "q95");
    for (k, row) in grid.rows.iter().enumerate() {
        let tfr = scaler.invert_all(row);
        print!("{:>6}", origin.origin_year + 1 + k as i32);
        for v in tfr {
            print!(" {v:>7.3}");
        }
        println!();
    }
    Ok(())
}
