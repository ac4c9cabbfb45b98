//! Monte Carlo benchmark: convergence of the standard error, the
//! boundary limits, and a few sampled paths with their running maxima.
//!
//! ```bash
//! cargo run --release -p qlookback --example monte_carlo
//! ```

use qlookback::market::{MarketParams, MonitoringSchedule};
use qlookback::oracles::{mc_price, sample_path, McConfig};

fn main() -> qlookback::Result<()> {
    let params = MarketParams::new(0.05, 0.2, 100.0, 2)?;
    let schedule = MonitoringSchedule::annual(&params)?;

    println!("standard error halves when paths quadruple:");
    for paths in [40_000u64, 160_000, 640_000] {
        let curve = mc_price(&params, &schedule, &McConfig::new(paths, 3), &[1.0])?;
        println!(
            "  {paths:>7} paths: u(T, 1) = {:.6} ± {:.2e}",
            curve.values[0],
            curve.stderr.as_ref().unwrap()[0]
        );
    }

    let curve = mc_price(
        &params,
        &schedule,
        &McConfig::new(200_000, 3),
        &[0.0, 1e-4, 0.5, 1.0, 2.0],
    )?;
    println!("\nboundary behavior (u(T, 0) = e^(-rT) = {:.6}):", (-0.1f64).exp());
    for (i, &z) in curve.zs.iter().enumerate() {
        println!("  z = {z:<8} u = {:.6}", curve.values[i]);
    }

    let mut config = McConfig::new(10, 5);
    config.steps_per_interval = 4;
    println!("\nsampled path (spot, running max at monitored dates only):");
    for (t, s, y) in sample_path(&params, &schedule, &config, 1.0, 0) {
        println!("  t = {t:4.2}  S = {s:8.3}  Y = {y:8.3}");
    }
    Ok(())
}
