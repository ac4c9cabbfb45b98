//! Full variational pricing run: fit the initial state, evolve the
//! ansatz parameters segment by segment with per-step oracle tracking,
//! and extract the curve.
//!
//! ```bash
//! cargo run --release -p qlookback --example price_varqite
//! ```

use qlookback::market::{MarketParams, SpatialGrid};
use qlookback::pipeline::{run_m2, Engine, Method, RunSpec};
use qlookback::qsim::{encode_state, overlap};

fn main() -> qlookback::Result<()> {
    let params = MarketParams::new(0.05, 0.2, 100.0, 2)?;
    let grid = SpatialGrid::with_qubits(4)?;

    let mut spec = RunSpec::new(Method::M2, Engine::Varqite, params, grid.clone(), 100)?;
    spec.dt = 0.01;
    spec.track_oracle = true;
    let variational = run_m2(&spec)?;

    let mut exact_spec = spec.clone();
    exact_spec.engine = Engine::Expm;
    let exact = run_m2(&exact_spec)?;

    let fit = variational.manifest.fit.as_ref().expect("variational runs fit");
    println!(
        "initial fit: cost {:.2e} after {} restarts / {} evaluations",
        fit.cost, fit.restarts_used, fit.evaluations
    );
    for seg in &variational.manifest.segments {
        println!(
            "segment {} ({}): {} steps, min fidelity vs oracle {:.6}",
            seg.index,
            seg.operator,
            seg.steps,
            seg.min_fidelity_vs_oracle.unwrap_or(f64::NAN)
        );
    }

    let fidelity = overlap(
        &encode_state(&variational.final_state, 5)?,
        &encode_state(&exact.final_state, 5)?,
    )?;
    println!("terminal fidelity vs exact evolution: {fidelity:.6}");
    println!(
        "max curve deviation vs exact engine: {:.3e}",
        variational.curve.max_abs_deviation(&exact.curve)
    );
    println!("\n{:>6}  {:>12}  {:>12}", "z", "varqite", "exact");
    for (i, &z) in grid.points().iter().enumerate() {
        println!(
            "{z:6.3}  {:12.6}  {:12.6}",
            variational.curve.values[i], exact.curve.values[i]
        );
    }
    Ok(())
}
