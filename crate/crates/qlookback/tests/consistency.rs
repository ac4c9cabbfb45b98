//! Cross-module consistency checks that exercise the public surface
//! end to end.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qlookback::market::{MarketParams, SpatialGrid};
use qlookback::pauli::decompose;
use qlookback::pipeline::{run_m2, Engine, Method, RunSpec};
use qlookback::qsim::{encode_state, overlap};

/// The variational engine converges to the exact engine when the ansatz
/// is overparameterized and the step is small: full two-segment stacked
/// run at 4 computational qubits, 100 parameters, dt = 0.005.
#[test]
fn variational_engine_matches_exact_engine() {
    let params = MarketParams::new(0.05, 0.2, 100.0, 2).unwrap();
    let grid = SpatialGrid::new(16, 2.5).unwrap();
    let mut spec = RunSpec::new(Method::M2, Engine::Varqite, params, grid, 100).unwrap();
    spec.dt = 0.005;
    let vq = run_m2(&spec).unwrap();
    let mut espec = spec.clone();
    espec.engine = Engine::Expm;
    let ex = run_m2(&espec).unwrap();
    let fidelity = overlap(
        &encode_state(&vq.final_state, 5).unwrap(),
        &encode_state(&ex.final_state, 5).unwrap(),
    )
    .unwrap();
    assert!(fidelity >= 0.999, "fidelity {fidelity}");
    let dev = vq.curve.max_abs_deviation(&ex.curve);
    assert!(dev <= 5e-2, "curve deviation {dev}");
}

/// Oracle-assisted mode re-fits the parameters against the exactly
/// evolved reference at each segment boundary; with a convergent pure
/// run it must stay at least as faithful.
#[test]
fn refit_mode_tracks_the_exact_flow() {
    let params = MarketParams::new(0.05, 0.2, 100.0, 2).unwrap();
    let grid = SpatialGrid::new(16, 2.5).unwrap();
    let mut spec = RunSpec::new(Method::M2, Engine::Varqite, params, grid, 60).unwrap();
    spec.dt = 0.02;
    spec.refit_segments = true;
    let refit = run_m2(&spec).unwrap();
    let mut espec = spec.clone();
    espec.engine = Engine::Expm;
    let exact = run_m2(&espec).unwrap();
    let fidelity = overlap(
        &encode_state(&refit.final_state, 5).unwrap(),
        &encode_state(&exact.final_state, 5).unwrap(),
    )
    .unwrap();
    assert!(fidelity >= 0.99, "refit fidelity {fidelity}");
}

/// Decomposing a dense 8-qubit matrix stays well under the complexity
/// budget (seconds, not minutes).
#[test]
fn dense_eight_qubit_decomposition_is_fast() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = DMatrix::from_fn(256, 256, |_, _| rng.gen_range(-1.0..1.0));
    let start = std::time::Instant::now();
    let sum = decompose(&m, 1e-12);
    let elapsed = start.elapsed();
    assert_eq!(sum.term_count(), 65536); // dense input keeps every string
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "decomposition took {elapsed:?}"
    );
}
