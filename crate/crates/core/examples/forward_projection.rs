//! File-based pipeline: ingest, full-sample training, projection to 2040
//! and the aggregate report, all written under one output directory.
//!
//!     cargo run --release --example forward_projection [out_dir]

use std::fmt::Write as _;
use std::path::PathBuf;

use tfrcast::ingest::write_raw;
use tfrcast::pipeline::{
    benchmark_configs, run_forecast, run_ingest, run_report, run_train, synth_panel, TrainMode,
    FORECASTS_FILE, PANEL_FILE,
};
use tfrcast::project::CATEGORY_LABELS;
use tfrcast::train::TrainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("tfrcast-projection-example"));
    let (mut synth, cfg) = benchmark_configs(11);
    synth.n_countries = 30;
    let cfg = TrainConfig { max_epochs: 15, ..cfg };

    std::fs::create_dir_all(&out)?;
    let raw = out.join("raw.csv");
    let reports = synth_panel(&synth);
    write_raw(&raw, &reports)?;

    let (weights, regions) = (out.join("weights.csv"), out.join("regions.csv"));
    let (mut w, mut r) = (String::from("country_code,weight\n"), String::from("country_code,region\n"));
    for i in 0..synth.n_countries {
        let code = tfrcast::pipeline::country_code(i);
        writeln!(w, "{code},{}", 1 + i % 5)?;
        writeln!(r, "{code},{}", ["north", "south", "east"][i % 3])?;
    }
    std::fs::write(&weights, w)?;
    std::fs::write(&regions, r)?;

    run_ingest(&raw, &out.join("ingest"), &cfg)?;
    let panel = out.join("ingest").join(PANEL_FILE);
    run_train(&panel, &out.join("model"), &cfg, TrainMode::Full)?;
    let records = run_forecast(&panel, &out.join("model"), &out.join("forecast"), 2040)?;
    println!("{} forecast rows", records.len());

    let report = run_report(
        &[out.join("forecast").join(FORECASTS_FILE)],
        Some(&weights),
        Some(&regions),
        &out.join("report"),
        2040,
        cfg.seed,
    )?;
    for e in &report.weighted_tfr {
        match e.value {
            Some(v) => println!("{:<7} {} weighted TFR {v:.3}", e.model, e.interval),
            None => println!("{:<7} {} weighted TFR n/a", e.model, e.interval),
        }
    }
    for s in &report.category_shares {
        let shares: Vec<String> = CATEGORY_LABELS
            .iter()
            .filter_map(|l| s.shares.get(*l).map(|v| format!("{l} {:.0}%", 100.0 * v)))
            .collect();
        println!("{:<7} {}: {}", s.model, report.endpoint_year, shares.join(", "));
    }
    println!("outputs in {}", out.display());
    Ok(())
}
