//! Trains a small ensemble on a synthetic panel and compares it with the
//! naive drift baseline on the last 15 years.
//!
//!     cargo run --release --example synthetic_benchmark [seed]

use tfrcast::pipeline::{benchmark_configs, run_benchmark};

fn main() -> tfrcast::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);

    let (synth, cfg) = benchmark_configs(seed);
    let result = run_benchmark(&synth, &cfg)?;

    println!("trained {} members in {:.1?}", result.members, result.elapsed);
    println!("{:<11} {:<8} {:>8} {:>8} {:>8}", "metric", "model", "median", "q1", "q3");
    for s in &result.report.summaries {
        println!("{:<11} {:<8} {:>8.4} {:>8.4} {:>8.4}", s.metric, s.model, s.median, s.q1, s.q3);
    }
    for t in &result.report.tests {
        println!("{}: {} vs {} p = {:.3e}", t.metric, t.best, t.second, t.p_value);
    }
    println!("pooled 90% coverage: {:.1}%", result.pooled_coverage());
    Ok(())
}
