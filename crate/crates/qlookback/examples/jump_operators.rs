//! Inspect the finite-difference operators: the continuous generator,
//! the jump operator and its defining one-step action, and the four-way
//! block split used by the stacked formulation.
//!
//! ```bash
//! cargo run --release -p qlookback --example jump_operators
//! ```

use nalgebra::DVector;
use qlookback::market::{MarketParams, SpatialGrid};
use qlookback::operators::{build_hc, build_hj, build_method2_blocks};
use qlookback::oracles::{apply_jump, expm_evolve};

fn main() -> qlookback::Result<()> {
    let grid = SpatialGrid::with_qubits(4)?;
    let params = MarketParams::new(0.05, 0.2, 100.0, 2)?;
    let lambda = grid.lambda();
    println!(
        "grid: {} points, spacing {:.4}, pinned index λ = {lambda} (z_λ = {})",
        grid.len(),
        grid.dz(),
        grid.z(lambda)
    );

    let hc = build_hc(&grid, &params)?;
    let h = 1e-3;
    let hj = build_hj(&grid, &params, h)?;
    println!(
        "\ncontinuous operator: {} nonzeros; jump operator: {} nonzeros",
        hc.triplets().len(),
        hj.triplets().len()
    );

    // Evolve the payoff for a year, then compare the one-step jump-window
    // action with the direct reset u(τ⁺, z_i) = z_i·u(τ⁻, 1).
    let u = expm_evolve(&hc, &DVector::from_vec(qlookback::market::payoff(&grid)), 1.0)?;
    let g_j = hj.generator();
    let windowed = &u + h * (&g_j * &u);
    let mut direct = u.clone();
    apply_jump(&mut direct, &grid);
    let worst = (0..grid.len())
        .map(|i| (windowed[i] - direct[i]).abs())
        .fold(0.0f64, f64::max);
    println!("\none-step jump window vs direct reset (h = {h}):");
    println!("{:>6}  {:>10}  {:>10}  {:>10}", "z", "pre-jump", "windowed", "direct");
    for i in [lambda - 1, lambda, lambda + 1, lambda + 3, grid.len() - 1] {
        println!(
            "{:6.3}  {:10.6}  {:10.6}  {:10.6}",
            grid.z(i),
            u[i],
            windowed[i],
            direct[i]
        );
    }
    println!("max |windowed - direct| = {worst:.3e} (O(h))");

    let blocks = build_method2_blocks(&grid, &params)?;
    let sum = blocks.hcnw.entries()
        + blocks.hcse.entries()
        + blocks.hcne.entries()
        + blocks.hcsw.entries();
    println!(
        "\nblock split: |NW|+|SE|+|NE|+|SW| - |continuous| = {:.1e} (exact identity)",
        (sum - hc.entries()).amax()
    );
    println!(
        "single-coupling blocks: SW holds {} entry, NE holds {} entry",
        blocks.hcsw.triplets().len(),
        blocks.hcne.triplets().len()
    );

    // Row-major CSV export of the displayed entries.
    let path = std::env::temp_dir().join("qlookback_hc.csv");
    std::fs::write(&path, hc.to_csv())?;
    println!("\nwrote the continuous operator to {}", path.display());
    Ok(())
}
