//! Log standardization, sliding windows and the chronological split.
//!
//!     cargo run --example windows

use tfrcast::ingest::{harmonize, IngestOptions};
use tfrcast::pipeline::{synth_panel, SynthConfig};
use tfrcast::transform::{
    expected_window_count, fit_scaler, log_standardize, make_windows, temporal_split, CountryIndex,
    SplitSpec,
};

fn main() -> tfrcast::Result<()> {
    let panel = harmonize(&synth_panel(&SynthConfig { n_countries: 8, ..SynthConfig::default() }), IngestOptions::default())?.panel;
    let spec = SplitSpec::default();
    let scaler = fit_scaler(&panel, Some(spec.train_cutoff_year))?;
    println!("scaler mu {:.4} sigma {:.4}", scaler.mu, scaler.sigma);

    let std = log_standardize(&panel, scaler, &CountryIndex::from_panel(&panel))?;
    let (l_enc, l_pred) = (24, 15);
    let all = make_windows(&std, l_enc, l_pred, 1)?;
    let n = std.series[0].z.len();
    println!(
        "{} windows in total; a {n}-year series yields {}",
        all.len(),
        expected_window_count(n, l_enc, l_pred)
    );

    let w = &all.samples[0];
    println!("first window: origin {}, encoder row 0 = {:?}", w.origin_year, w.encoder_input.row(0));

    let split = temporal_split(&std, l_enc, l_pred, spec)?;
    let origins = |s: &tfrcast::transform::WindowSet| {
        let y: Vec<i32> = s.samples.iter().map(|w| w.origin_year).collect();
        (y.iter().min().copied(), y.iter().max().copied())
    };
    println!("train {} windows, origins {:?}", split.train.len(), origins(&split.train));
    println!("validation {} windows, origins {:?}", split.validation.len(), origins(&split.validation));
    println!("test origins: {}", split.test.len());
    Ok(())
}
