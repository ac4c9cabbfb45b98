//! Build the layered `H` + `CRy`/`Ry` ansatz, inspect its gate list and
//! verify the properties the pricing pipeline relies on: real amplitudes
//! and exact normalization for any parameter values.
//!
//! ```bash
//! cargo run --release -p qlookback --example layered_ansatz
//! ```

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qlookback::qsim::{build_ansatz, Gate};

fn main() -> qlookback::Result<()> {
    let circuit = build_ansatz(4, 100)?;
    let cry = circuit
        .gates()
        .iter()
        .filter(|g| matches!(g, Gate::CRy { .. }))
        .count();
    let ry = circuit
        .gates()
        .iter()
        .filter(|g| matches!(g, Gate::Ry { .. }))
        .count();
    println!(
        "4-qubit, 100-parameter ansatz: {} gates ({} H, {} CRy, {} Ry)",
        circuit.gates().len(),
        circuit.gates().len() - cry - ry,
        cry,
        ry
    );
    println!("\nfirst gates of the deterministic layout:");
    for line in circuit.dump().lines().take(14) {
        println!("  {line}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_imag: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..50 {
        let theta: Vec<f64> = (0..100).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let state = circuit.apply(&theta)?;
        worst_imag = worst_imag.max(state.max_imag());
        worst_norm = worst_norm.max((state.norm() - 1.0).abs());
    }
    println!("\nover 50 random parameter draws:");
    println!("  max |Im amplitude| = {worst_imag:.1e}");
    println!("  max |norm - 1|     = {worst_norm:.1e}");
    Ok(())
}
