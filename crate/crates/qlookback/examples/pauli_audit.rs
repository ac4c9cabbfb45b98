//! Decompose the evolution operators into weighted Pauli strings and
//! count the retained terms, as a proxy for circuit cost.
//!
//! ```bash
//! cargo run --release -p qlookback --example pauli_audit
//! ```

use qlookback::market::{MarketParams, MonitoringSchedule, SpatialGrid};
use qlookback::operators::{assemble_m2_segment, build_hc, build_hj};
use qlookback::pauli::{decompose, mean_term_count, DEFAULT_PRUNE_THRESHOLD};

fn main() -> qlookback::Result<()> {
    let grid = SpatialGrid::with_qubits(4)?;
    let params = MarketParams::new(0.05, 0.2, 100.0, 2)?;

    let hc = decompose(
        &build_hc(&grid, &params)?.hamiltonian(),
        DEFAULT_PRUNE_THRESHOLD,
    );
    let hj = decompose(
        &build_hj(&grid, &params, 1e-3)?.hamiltonian(),
        DEFAULT_PRUNE_THRESHOLD,
    );
    println!("continuous operator: {} terms on {} qubits", hc.term_count(), hc.qubits());
    println!("jump operator:       {} terms on {} qubits", hj.term_count(), hj.qubits());

    for maturity in [2u32, 4] {
        let p = MarketParams::new(0.05, 0.2, 100.0, maturity)?;
        let schedule = MonitoringSchedule::annual(&p)?;
        let sums: Vec<_> = (0..schedule.num_intervals())
            .map(|j| {
                let op = assemble_m2_segment(j, &grid, &p, &schedule)?;
                Ok(decompose(&op.hamiltonian(), DEFAULT_PRUNE_THRESHOLD))
            })
            .collect::<qlookback::Result<_>>()?;
        let counts: Vec<usize> = sums.iter().map(|s| s.term_count()).collect();
        println!(
            "stacked segments, T = {maturity}: counts {counts:?}, mean {}",
            mean_term_count(&sums)
        );
    }

    println!("\nlargest-weight terms of the continuous operator:");
    let mut terms: Vec<_> = hc.terms().collect();
    terms.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
    for (string, coeff) in terms.iter().take(8) {
        println!("  {string}  {:+.6}{:+.6}i", coeff.re, coeff.im);
    }
    println!("\n(the full sorted term lists are exported by `qlookback pauli-audit`)");
    Ok(())
}
