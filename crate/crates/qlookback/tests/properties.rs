//! Property tests over randomly drawn market data, grids, matrices and
//! circuits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qlookback::market::{inflate, payoff, reduce, MarketParams, SpatialGrid};
use qlookback::operators::stencil;
use qlookback::oracles::Provenance;
use qlookback::pauli::{decompose, reconstruct, Axis, PauliString};
use qlookback::pipeline::extract_price;
use qlookback::qsim::{build_ansatz, encode_state, overlap};

fn params_strategy() -> impl Strategy<Value = MarketParams> {
    (0.0..0.15f64, 0.05..0.6f64, 1.0..500.0f64, 1u32..6).prop_map(|(r, sigma, s0, t)| {
        MarketParams::new(r, sigma, s0, t).unwrap()
    })
}

fn grid_strategy() -> impl Strategy<Value = SpatialGrid> {
    prop_oneof![Just(16usize), Just(31), Just(61), Just(256)]
        .prop_map(|n| SpatialGrid::new(n, 2.5).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduce_then_inflate_recovers_raw_value(
        params in params_strategy(),
        eta_frac in 0.0..1.0f64,
        x in 1.0..400.0f64,
        y in 1.0..400.0f64,
        u in 0.0..2.0f64,
    ) {
        let eta = eta_frac * params.maturity();
        let (xi, z) = reduce(eta, x, y, &params).unwrap();
        prop_assert!((xi - (params.maturity() - eta)).abs() <= 1e-12);
        prop_assert!((z * y - x).abs() <= 1e-9 * x.max(1.0));
        let v = inflate(u, y).unwrap();
        prop_assert!((v - y * u).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn payoff_is_nonincreasing_and_clipped(grid in grid_strategy()) {
        let u0 = payoff(&grid);
        for w in u0.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        for (i, &v) in u0.iter().enumerate() {
            if grid.z(i) >= 1.0 {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn stencil_row_sum_matches_discount_rate(
        params in params_strategy(),
        grid in grid_strategy(),
        idx in 1usize..1000,
    ) {
        let i = 1 + idx % (grid.len() - 2);
        let s = stencil(i, &grid, &params).unwrap();
        let scale = s.alpha.abs().max(s.gamma.abs()).max(1.0);
        prop_assert!((s.alpha + s.beta + s.gamma + params.rate).abs() <= 1e-10 * scale);
    }

    #[test]
    fn decomposition_round_trips_random_matrices(
        entries in proptest::collection::vec(-5.0..5.0f64, 64),
    ) {
        let m = DMatrix::from_vec(8, 8, entries);
        let sum = decompose(&m, 1e-12);
        let back = reconstruct(&sum);
        for i in 0..8 {
            for j in 0..8 {
                prop_assert!((back[(i, j)] - Complex64::new(m[(i, j)], 0.0)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn pauli_strings_square_to_identity(
        axes in proptest::collection::vec(
            prop_oneof![Just(Axis::I), Just(Axis::X), Just(Axis::Y), Just(Axis::Z)],
            1..5,
        ),
    ) {
        let s = PauliString::new(axes);
        let m = s.to_matrix();
        let sq = &m * &m;
        let dim = sq.nrows();
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((sq[(i, j)] - Complex64::new(want, 0.0)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn ansatz_states_stay_real_and_normalized(
        qubits in 2usize..5,
        budget in 0usize..40,
        seed_thetas in proptest::collection::vec(-3.2..3.2f64, 40),
    ) {
        let circuit = build_ansatz(qubits, budget).unwrap();
        let theta = &seed_thetas[..budget];
        let out = circuit.apply(theta).unwrap();
        prop_assert!(out.max_imag() <= 1e-10);
        prop_assert!((out.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn overlap_is_symmetric_probability(
        a in proptest::collection::vec(-1.0..1.0f64, 8),
        b in proptest::collection::vec(-1.0..1.0f64, 8),
    ) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-6));
        prop_assume!(b.iter().any(|v| v.abs() > 1e-6));
        let sa = encode_state(&a, 3).unwrap();
        let sb = encode_state(&b, 3).unwrap();
        let ab = overlap(&sa, &sb).unwrap();
        let ba = overlap(&sb, &sa).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn extraction_ignores_positive_rescaling(
        params in params_strategy(),
        values in proptest::collection::vec(0.05..2.0f64, 8),
        scale in 0.01..100.0f64,
    ) {
        let zs: Vec<f64> = (0..8).map(|i| i as f64 * 0.25).collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let a = extract_price(&values, &params, &zs, Provenance::Fd).unwrap();
        let b = extract_price(&scaled, &params, &zs, Provenance::Fd).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
        prop_assert!((a.values[0] - (-params.rate * params.maturity()).exp()).abs() <= 1e-12);
    }
}
