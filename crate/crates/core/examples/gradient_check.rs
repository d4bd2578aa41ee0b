//! Finite-difference check of the hand-written backward pass.
//!
//!     cargo run --release --example gradient_check

use tfrcast::pipeline::{gradcheck_config, run_gradcheck};

fn main() -> tfrcast::Result<()> {
    println!("{:?}", gradcheck_config());
    let report = run_gradcheck(42, 250, 1e-4)?;
    println!(
        "{} coordinates, max relative error {:.2e} (tolerance {:.0e}): {}",
        report.checked,
        report.max_rel_error,
        report.tolerance,
        if report.passed() { "ok" } else { "FAILED" }
    );
    for f in &report.failures {
        println!("  #{} analytic {:.6e} numeric {:.6e}", f.index, f.analytic, f.numeric);
    }
    Ok(())
}
