//! Raw reports to a harmonized annual panel.
//!
//!     cargo run --example ingest_panel

use tfrcast::ingest::{harmonize, parse_raw, write_raw, IngestOptions};
use tfrcast::pipeline::{synth_panel, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("tfrcast-ingest-example");
    std::fs::create_dir_all(&dir)?;
    let raw_path = dir.join("raw.csv");

    let reports = synth_panel(&SynthConfig { n_countries: 12, n_years: 50, ..SynthConfig::default() });
    write_raw(&raw_path, &reports)?;
    let parsed = parse_raw(&raw_path)?;
    println!("{} reports read from {}", parsed.len(), raw_path.display());

    let out = harmonize(&parsed, IngestOptions::default())?;
    let meta = &out.panel.metadata;
    println!(
        "{} countries, {} cells, {:.1}% interpolated",
        out.panel.len(),
        meta.total_cells,
        100.0 * out.panel.interpolated_share()
    );
    println!("{:<6} {:>9} {:>10} {:>10} {:>8}", "code", "gaps", "dispersion", "volatility", "smoothed");
    for row in &out.diagnostics {
        let d = &row.diagnostics;
        println!(
            "{:<6} {:>9.4} {:>10.4} {:>10.4} {:>8}",
            row.country_code, d.gap_fraction, d.source_dispersion, d.volatility, row.smoothed
        );
    }

    let first = out.panel.country_codes()[0].clone();
    let s = out.panel.get(&first).unwrap();
    let tail: Vec<String> = s.values.iter().rev().take(5).rev().map(|v| format!("{v:.3}")).collect();
    println!("{first} {}..{}: last values {}", s.first_year, s.last_year(), tail.join(" "));
    Ok(())
}
