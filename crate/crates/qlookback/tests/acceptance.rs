//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them).
//!
//! ```text
//! cargo test -p qlookback --test acceptance -- --nocapture
//! ```

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qlookback::market::{payoff, MarketParams, MonitoringSchedule, SpatialGrid};
use qlookback::operators::{assemble_m2_segment, build_hc, build_hj};
use qlookback::oracles::{expm_evolve, fd_solve, mc_price, FdScheme, McConfig, PriceCurve};
use qlookback::pauli::{decompose, mean_term_count, reconstruct, PauliSum, DEFAULT_PRUNE_THRESHOLD};
use qlookback::pipeline::{
    extract_price, fit_initial_params, run_m1, run_m2, Engine, FitOptions, Method, RunSpec,
};
use qlookback::qsim::{build_ansatz, encode_state, overlap};
use qlookback::varqite::{evolve_segment, mclachlan_system, DiagnosticMode, EvolutionState, Hamiltonian};

const JUMP_WINDOW: f64 = 1e-3;

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} [{}] {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn market() -> MarketParams {
    MarketParams::new(0.05, 0.2, 100.0, 2).unwrap()
}

fn grid16() -> SpatialGrid {
    SpatialGrid::new(16, 2.5).unwrap()
}

fn segment_sums(maturity: u32, prune: f64) -> Vec<PauliSum> {
    let params = MarketParams::new(0.05, 0.2, 100.0, maturity).unwrap();
    let schedule = MonitoringSchedule::annual(&params).unwrap();
    let grid = grid16();
    (0..schedule.num_intervals())
        .map(|j| {
            let op = assemble_m2_segment(j, &grid, &params, &schedule).unwrap();
            decompose(&op.hamiltonian(), prune)
        })
        .collect()
}

/// Criterion 1 — operator term counts at 4 computational qubits.
///
/// The stacked-segment means must match the reference table exactly. The
/// two single-operator reference rows (208 for the continuous operator,
/// 192 for the jump operator) do not correspond to the operators as
/// constructed; the criterion's documented-deviation clause applies, so
/// this test (a) verifies the measured counts are invariant over market
/// parameters, (b) verifies the structural explanation of both numbers,
/// and (c) prints the analysis.
#[test]
fn criterion_1_pauli_term_counts() {
    let grid = grid16();
    let count_pair = |r: f64, sigma: f64| {
        let p = MarketParams::new(r, sigma, 100.0, 2).unwrap();
        let hc = decompose(&build_hc(&grid, &p).unwrap().hamiltonian(), DEFAULT_PRUNE_THRESHOLD);
        let hj = decompose(
            &build_hj(&grid, &p, JUMP_WINDOW).unwrap().hamiltonian(),
            DEFAULT_PRUNE_THRESHOLD,
        );
        (hc.term_count(), hj.term_count())
    };

    let mean_t2 = mean_term_count(&segment_sums(2, DEFAULT_PRUNE_THRESHOLD));
    let mean_t4 = mean_term_count(&segment_sums(4, DEFAULT_PRUNE_THRESHOLD));
    let means_match = mean_t2 == 456.0 && mean_t4 == 2180.0;

    let (hc, hj) = count_pair(0.05, 0.2);
    let invariant = [(0.01, 0.35), (0.08, 0.15), (0.03, 0.5)]
        .iter()
        .all(|&(r, s)| count_pair(r, s) == (hc, hj));

    // Structural check: dropping the jump operator's west column removes
    // exactly one XOR mask and lands on the reference's 192.
    let p = market();
    let mut west_dropped = build_hj(&grid, &p, JUMP_WINDOW).unwrap().hamiltonian();
    for i in grid.lambda() + 1..grid.len() {
        west_dropped[(i, grid.lambda() - 1)] = 0.0;
    }
    let west_dropped_count =
        decompose(&west_dropped, DEFAULT_PRUNE_THRESHOLD).term_count();

    let pass = means_match && invariant && hc == 94 && hj == 208 && west_dropped_count == 192;
    report(
        1,
        pass,
        &format!(
            "m2 segment means {mean_t2}/{mean_t4} match 456/2180 exactly; \
             single-operator counts hc={hc}, hj={hj} are (r,σ)-invariant; \
             documented deviation: the reference's 208 equals the jump operator \
             as displayed (13 XOR masks x 16) and its 192 equals the jump \
             operator with the west column dropped ({west_dropped_count}), while \
             the continuous operator itself has 6 masks -> {hc} terms"
        ),
    );
}

/// Criterion 2 — decomposition round-trip at 1e-12 for 50 random real
/// matrices and every constructed operator.
#[test]
fn criterion_2_pauli_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260808);
    let mut worst: f64 = 0.0;
    let mut check = |m: &DMatrix<f64>| {
        let sum = decompose(m, DEFAULT_PRUNE_THRESHOLD);
        let back = reconstruct(&sum);
        let dim = back.nrows();
        for i in 0..dim {
            for j in 0..dim {
                let want = if i < m.nrows() && j < m.ncols() {
                    m[(i, j)]
                } else {
                    0.0
                };
                worst = worst.max((back[(i, j)].re - want).abs().max(back[(i, j)].im.abs()));
            }
        }
    };
    for _ in 0..50 {
        let m = DMatrix::from_fn(16, 16, |_, _| rng.gen_range(-5.0..5.0));
        check(&m);
    }
    let grid = grid16();
    let p = market();
    check(&build_hc(&grid, &p).unwrap().hamiltonian());
    check(&build_hj(&grid, &p, JUMP_WINDOW).unwrap().hamiltonian());
    for maturity in [2, 4] {
        let params = MarketParams::new(0.05, 0.2, 100.0, maturity).unwrap();
        let schedule = MonitoringSchedule::annual(&params).unwrap();
        for j in 0..schedule.num_intervals() {
            check(&assemble_m2_segment(j, &grid, &params, &schedule).unwrap().hamiltonian());
        }
    }
    report(2, worst <= 1e-12, &format!("max reconstruction error {worst:.3e} <= 1e-12"));
}

/// Criterion 3 — three-route consistency within `5·(K·Δ² + h)` on the
/// 16- and 256-point grids, with `K` from a Richardson fit and
/// second-order self-convergence under spacing halving.
#[test]
fn criterion_3_cross_oracle_consistency() {
    let params = market();
    let schedule = MonitoringSchedule::annual(&params).unwrap();

    // Richardson fit over the nested family 16 -> 31 -> 61 -> 121.
    let mut curves: Vec<(usize, PriceCurve)> = Vec::new();
    for &n in &[16usize, 31, 61, 121] {
        let grid = SpatialGrid::new(n, 2.5).unwrap();
        let dt = 0.25 * grid.dz() * grid.dz();
        curves.push((
            n,
            fd_solve(&params, &schedule, &grid, dt, FdScheme::Implicit).unwrap(),
        ));
    }
    let mut devs = Vec::new();
    for w in curves.windows(2) {
        devs.push(w[0].1.max_abs_deviation(&w[1].1));
    }
    let ratio_a = devs[0] / devs[1];
    let ratio_b = devs[1] / devs[2];
    let ratios_ok = (3.0..5.0).contains(&ratio_a) && (3.0..5.0).contains(&ratio_b);

    let dz16 = 2.5 / 15.0;
    let k = devs[0] / (0.75 * dz16 * dz16);

    let mut pair_ok = true;
    let mut detail = format!("K = {k:.3}, halving ratios {ratio_a:.2}/{ratio_b:.2}");
    for &n in &[16usize, 256] {
        let grid = SpatialGrid::new(n, 2.5).unwrap();
        let tol = 5.0 * (k * grid.dz() * grid.dz() + JUMP_WINDOW);
        let fd = fd_solve(&params, &schedule, &grid, 1e-4, FdScheme::Implicit).unwrap();
        let m1 = run_m1(&RunSpec::new(Method::M1, Engine::Expm, params, grid.clone(), 8).unwrap())
            .unwrap()
            .curve;
        let m2 = run_m2(&RunSpec::new(Method::M2, Engine::Expm, params, grid.clone(), 8).unwrap())
            .unwrap()
            .curve;
        let worst = fd
            .max_abs_deviation(&m1)
            .max(fd.max_abs_deviation(&m2))
            .max(m1.max_abs_deviation(&m2));
        pair_ok &= worst <= tol;
        detail.push_str(&format!("; n={n}: max pairwise {worst:.3e} <= {tol:.3e}"));
    }
    report(3, ratios_ok && pair_ok, &detail);
}

/// Criterion 4 — the finite-difference curve sits inside the Monte Carlo
/// three-standard-error band at the probe points (10⁶ paths).
#[test]
fn criterion_4_mc_agreement() {
    let params = market();
    let schedule = MonitoringSchedule::annual(&params).unwrap();
    let grid = SpatialGrid::new(256, 2.5).unwrap();
    let fd = fd_solve(&params, &schedule, &grid, 1e-4, FdScheme::Implicit).unwrap();
    let mc = mc_price(
        &params,
        &schedule,
        &McConfig::new(1_000_000, 20260808),
        &[0.5, 1.0, 1.5],
    )
    .unwrap();
    let mut pass = true;
    let mut detail = String::from("1e6 paths:");
    for (i, &z) in mc.zs.iter().enumerate() {
        let f = fd.value_at(z).unwrap();
        let dev = (f - mc.values[i]).abs();
        let band = 3.0 * mc.stderr.as_ref().unwrap()[i];
        pass &= dev <= band;
        detail.push_str(&format!(" z={z}: |fd-mc| {dev:.2e} vs 3σ {band:.2e};"));
    }
    report(4, pass, &detail);
}

/// Criterion 5 — variational fidelity: ≥ 0.99 against the exact flow on
/// a jump-free unit segment (4 qubits, 100 parameters, dt = 0.01), and
/// ≥ 0.97 for the full two-segment stacked run.
#[test]
fn criterion_5_varqite_fidelity() {
    let params = market();
    let grid = grid16();

    let circuit = build_ansatz(4, 100).unwrap();
    let target = encode_state(&payoff(&grid), 4).unwrap();
    let fit = fit_initial_params(&circuit, &target, None, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let hc = build_hc(&grid, &params).unwrap();
    let h_eff = hc.hamiltonian();
    let state = EvolutionState::new(fit.theta.clone());
    let (end, _) = evolve_segment(
        &state,
        &circuit,
        &Hamiltonian::Dense(&h_eff),
        1.0,
        0.01,
        DiagnosticMode::Off,
    )
    .unwrap();
    let evolved = circuit.apply(&end.theta).unwrap();
    let exact = expm_evolve(&hc, &DVector::from_vec(payoff(&grid)), 1.0).unwrap();
    let segment_fidelity =
        overlap(&evolved, &encode_state(exact.as_slice(), 4).unwrap()).unwrap();

    let mut spec = RunSpec::new(Method::M2, Engine::Varqite, params, grid.clone(), 100).unwrap();
    spec.dt = 0.01;
    let vq = run_m2(&spec).unwrap();
    let mut espec = spec.clone();
    espec.engine = Engine::Expm;
    let ex = run_m2(&espec).unwrap();
    let full_fidelity = overlap(
        &encode_state(&vq.final_state, 5).unwrap(),
        &encode_state(&ex.final_state, 5).unwrap(),
    )
    .unwrap();

    report(
        5,
        segment_fidelity >= 0.99 && full_fidelity >= 0.97,
        &format!(
            "jump-free segment fidelity {segment_fidelity:.6} >= 0.99; \
             full stacked-run fidelity {full_fidelity:.6} >= 0.97"
        ),
    );
}

/// Criterion 6 — the initial-parameter fit reaches cost < 1e-6 for the
/// payoff state at (4 qubits, 100 parameters).
#[test]
fn criterion_6_initial_state_fit() {
    let grid = grid16();
    let circuit = build_ansatz(4, 100).unwrap();
    let target = encode_state(&payoff(&grid), 4).unwrap();
    let fit = fit_initial_params(&circuit, &target, None, &FitOptions::default()).unwrap();
    report(
        6,
        fit.converged && fit.cost < 1e-6,
        &format!(
            "cost {:.3e} < 1e-6 after {} restarts, {} evaluations",
            fit.cost, fit.restarts_used, fit.evaluations
        ),
    );
}

/// Criterion 7 — property suites: realness/unitarity, derivative
/// cross-checks, metric positivity, extraction scale invariance,
/// padding-block preservation and the four-way block identity.
#[test]
fn criterion_7_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut detail = String::new();

    // Realness and unitarity of ansatz states at 1e-10.
    let mut max_imag: f64 = 0.0;
    let mut max_norm_err: f64 = 0.0;
    for _ in 0..25 {
        let q = rng.gen_range(2..=5);
        let p = rng.gen_range(0..=60);
        let c = build_ansatz(q, p).unwrap();
        let theta: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let out = c.apply(&theta).unwrap();
        max_imag = max_imag.max(out.max_imag());
        max_norm_err = max_norm_err.max((out.norm() - 1.0).abs());
    }
    let realness_ok = max_imag <= 1e-10 && max_norm_err <= 1e-10;
    detail.push_str(&format!(
        "realness {max_imag:.1e}/unitarity {max_norm_err:.1e} <= 1e-10"
    ));

    // Shift-rule derivatives vs central differences at 1e-6 over 100
    // random (circuit, θ) draws.
    let mut max_dev: f64 = 0.0;
    for _ in 0..100 {
        let q = rng.gen_range(2..=4);
        let p = rng.gen_range(1..=30);
        let c = build_ansatz(q, p).unwrap();
        let theta: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let slot = rng.gen_range(0..p);
        let d = c.derivative_state_shifted(&theta, slot).unwrap();
        let eps = 1e-5;
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[slot] += eps;
        tm[slot] -= eps;
        let fp = c.apply(&tp).unwrap();
        let fm = c.apply(&tm).unwrap();
        for i in 0..d.len() {
            let fd = (fp.amplitudes()[i] - fm.amplitudes()[i]) / (2.0 * eps);
            max_dev = max_dev.max((d.amplitudes()[i] - fd).norm());
        }
    }
    let shift_ok = max_dev <= 1e-6;
    detail.push_str(&format!("; shift-vs-fd {max_dev:.1e} <= 1e-6"));

    // Metric positive semidefiniteness: min eigenvalue >= -1e-8.
    let mut min_eig = f64::INFINITY;
    let zero = DMatrix::<f64>::zeros(16, 16);
    for _ in 0..10 {
        let c = build_ansatz(4, 40).unwrap();
        let theta: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let sys = mclachlan_system(&c, &theta, &Hamiltonian::Dense(&zero)).unwrap();
        min_eig = min_eig.min(sys.a.symmetric_eigen().eigenvalues.min());
    }
    let psd_ok = min_eig >= -1e-8;
    detail.push_str(&format!("; min A-eig {min_eig:.1e} >= -1e-8"));

    // Extraction scale invariance.
    let params = market();
    let state = [0.5, 0.3, 0.2, 0.1];
    let zs = [0.0, 0.5, 1.0, 1.5];
    let a = extract_price(&state, &params, &zs, qlookback::oracles::Provenance::Fd).unwrap();
    let scaled: Vec<f64> = state.iter().map(|v| 123.456 * v).collect();
    let b = extract_price(&scaled, &params, &zs, qlookback::oracles::Provenance::Fd).unwrap();
    let scale_ok = a
        .values
        .iter()
        .zip(&b.values)
        .all(|(x, y)| (x - y).abs() <= 1e-14);
    detail.push_str(&format!("; extraction scale-invariant {scale_ok}"));

    // Padding blocks stay exactly zero under exact stacked evolution
    // (three intervals pad to four blocks).
    let p3 = MarketParams::new(0.05, 0.2, 100.0, 3).unwrap();
    let spec = RunSpec::new(Method::M2, Engine::Expm, p3, grid16(), 8).unwrap();
    let out = run_m2(&spec).unwrap();
    let zero_ok = out.final_state[48..].iter().all(|&v| v == 0.0);
    detail.push_str(&format!("; padding preserved {zero_ok}"));

    // Four-way block identity, exact.
    let grid = grid16();
    let blocks = qlookback::operators::build_method2_blocks(&grid, &params).unwrap();
    let sum = blocks.hcnw.entries()
        + blocks.hcse.entries()
        + blocks.hcne.entries()
        + blocks.hcsw.entries();
    let identity_ok = sum == *build_hc(&grid, &params).unwrap().entries();
    detail.push_str(&format!("; block identity {identity_ok}"));

    report(
        7,
        realness_ok && shift_ok && psd_ok && scale_ok && zero_ok && identity_ok,
        &detail,
    );
}

/// Criterion 8 — comparative behavior of the exact pipelines against the
/// Monte Carlo benchmark: refining 4 → 8 computational qubits shrinks the
/// L∞ deviation for both formulations at both maturities, and the stacked
/// formulation is at least as accurate as the sequential one at equal
/// resources. Emits the plot-ready wide CSVs.
#[test]
fn criterion_8_qualitative_figure_reproduction() {
    let out_dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("benchmarks");
    std::fs::create_dir_all(&out_dir).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    let mut m1_q4_by_t = Vec::new();
    for &t_years in &[2u32, 4] {
        let params = MarketParams::new(0.05, 0.2, 100.0, t_years).unwrap();
        let schedule = MonitoringSchedule::annual(&params).unwrap();
        let mut dev_by_q = Vec::new();
        for &q in &[4u32, 8] {
            let grid = SpatialGrid::with_qubits(q).unwrap();
            let m1 =
                run_m1(&RunSpec::new(Method::M1, Engine::Expm, params, grid.clone(), 8).unwrap())
                    .unwrap()
                    .curve;
            let m2 =
                run_m2(&RunSpec::new(Method::M2, Engine::Expm, params, grid.clone(), 8).unwrap())
                    .unwrap()
                    .curve;
            let mc = mc_price(
                &params,
                &schedule,
                &McConfig::new(1_000_000, 4242),
                grid.points(),
            )
            .unwrap();
            let d1 = m1.max_abs_deviation(&mc);
            let d2 = m2.max_abs_deviation(&mc);
            pass &= d2 <= d1;
            detail.push_str(&format!("T={t_years} q={q}: m1 {d1:.2e}, m2 {d2:.2e}; "));
            dev_by_q.push((d1, d2));
            if q == 4 {
                m1_q4_by_t.push(d1);
            }

            let mut csv = String::from("z,expm-m1,expm-m2,mc,mc_stderr\n");
            let stderr = mc.stderr.as_ref().unwrap();
            for (i, &z) in grid.points().iter().enumerate() {
                csv.push_str(&format!(
                    "{z:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                    m1.values[i], m2.values[i], mc.values[i], stderr[i]
                ));
            }
            std::fs::write(out_dir.join(format!("benchmark_t{t_years}_q{q}.csv")), csv).unwrap();
        }
        pass &= dev_by_q[1].0 < dev_by_q[0].0 && dev_by_q[1].1 < dev_by_q[0].1;
    }
    // Error accumulates over the longer horizon for the sequential method.
    pass &= m1_q4_by_t[1] > m1_q4_by_t[0];
    report(
        8,
        pass,
        &format!("{detail}CSVs in {}", out_dir.display()),
    );
}
