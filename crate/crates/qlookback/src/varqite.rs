//! Variational imaginary-time evolution by McLachlan's principle.
//!
//! The ansatz state `|φ(θ)⟩` tracks the normalized flow
//! `d|ψ⟩/dτ = -(Ĥ - E_τ)|ψ⟩` by solving `A·θ̇ = -C` with
//! `A_ij = Re⟨∂_i φ|∂_j φ⟩` and `C_i = Re⟨∂_i φ|Ĥ|φ⟩`, then stepping the
//! parameters with explicit Euler. The real-amplitude ansatz makes
//! `⟨∂_i φ|φ⟩` vanish identically, so the `E_τ` term never enters `C`;
//! the energy only feeds the tracked normalization factor
//! `log γ(τ)` (a diagnostic — price extraction anchors on the boundary
//! value instead).
//!
//! `Ĥ` is accepted in Hamiltonian form (`exp(-τ·Ĥ)` evolution, see
//! [`crate::operators::OperatorMatrix::hamiltonian`]) and may be
//! non-Hermitian; no symmetrization is applied.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracles::expm;
use crate::pauli::{reconstruct_real, PauliSum};
use crate::qsim::{Circuit, Statevector};

/// Ridge added to `A` before solving; escalated tenfold on failure.
pub const RIDGE_BASE: f64 = 1e-8;
/// Largest ridge tried before the solve is reported as failed.
pub const RIDGE_MAX: f64 = 1e-4;
/// Largest parameter move (L2, radians) a single Euler update may take.
///
/// Near degenerate points of the metric the rates `θ̇` can be huge while
/// the projected state velocity stays O(1); a fixed step would then throw
/// the parameters far outside the linearization. Steps subdivide until
/// each update moves at most this far, which integrates the same ODE.
pub const MAX_STEP_RADIANS: f64 = 0.2;
/// Bound on substeps per requested step before giving up.
const MAX_SUBSTEPS: usize = 20_000;

/// Evolution operator handed to the McLachlan system.
#[derive(Debug, Clone, Copy)]
pub enum Hamiltonian<'a> {
    /// Dense matrix in Hamiltonian form.
    Dense(&'a DMatrix<f64>),
    /// Weighted Pauli strings; applied term by term.
    Pauli(&'a PauliSum),
}

impl Hamiltonian<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::Dense(m) => m.nrows(),
            Hamiltonian::Pauli(p) => p.dim(),
        }
    }

    fn apply(&self, state: &Statevector) -> Result<Vec<Complex64>> {
        match self {
            Hamiltonian::Dense(m) => {
                let amps = state.amplitudes();
                if m.ncols() != amps.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "operator dimension {} vs state dimension {}",
                        m.ncols(),
                        amps.len()
                    )));
                }
                let mut out = vec![Complex64::default(); m.nrows()];
                for (i, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for j in 0..m.ncols() {
                        acc += amps[j] * m[(i, j)];
                    }
                    *slot = acc;
                }
                Ok(out)
            }
            Hamiltonian::Pauli(p) => p.apply_vec(state.amplitudes()),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Hamiltonian::Dense(m) => (*m).clone(),
            Hamiltonian::Pauli(p) => reconstruct_real(p),
        }
    }
}

/// Parameter vector with elapsed imaginary time and the accumulated
/// normalization factor.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub theta: Vec<f64>,
    pub tau: f64,
    pub log_gamma: f64,
}

impl EvolutionState {
    pub fn new(theta: Vec<f64>) -> Self {
        Self {
            theta,
            tau: 0.0,
            log_gamma: 0.0,
        }
    }
}

/// Assembled McLachlan system at one evaluation point.
#[derive(Debug, Clone)]
pub struct McLachlanSystem {
    /// Metric `A_ij = Re⟨∂_i φ|∂_j φ⟩`; symmetric positive semidefinite.
    pub a: DMatrix<f64>,
    /// Forcing `C_i = Re⟨∂_i φ|Ĥ|φ⟩`.
    pub c: DVector<f64>,
    /// Energy `E = Re⟨φ|Ĥ|φ⟩`.
    pub energy: f64,
}

fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Build `A`, `C` and the energy for the current parameters.
pub fn mclachlan_system(
    circuit: &Circuit,
    theta: &[f64],
    hamiltonian: &Hamiltonian<'_>,
) -> Result<McLachlanSystem> {
    let state = circuit.apply(theta)?;
    if hamiltonian.dim() != state.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs 2^{} state",
            hamiltonian.dim(),
            circuit.qubits()
        )));
    }
    let p = circuit.params();
    let derivs: Vec<Statevector> = (0..p)
        .into_par_iter()
        .map(|slot| circuit.derivative_state(theta, slot))
        .collect::<Result<_>>()?;

    let mut a = DMatrix::zeros(p, p);
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            (i..p)
                .map(|j| real_dot(derivs[i].amplitudes(), derivs[j].amplitudes()))
                .collect()
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            a[(i, i + off)] = v;
            a[(i + off, i)] = v;
        }
    }

    let h_phi = hamiltonian.apply(&state)?;
    let c = DVector::from_iterator(
        p,
        derivs.iter().map(|d| real_dot(d.amplitudes(), &h_phi)),
    );
    let energy = real_dot(state.amplitudes(), &h_phi);
    Ok(McLachlanSystem { a, c, energy })
}

/// Shot-sampled McLachlan system for noise studies: every metric,
/// forcing and energy entry is replaced by a Bernoulli estimate with the
/// statistics of a Hadamard-test measurement at the given shot count
/// (standard error `bound/√shots`). Exact evaluation stays the default
/// for pricing runs.
pub fn mclachlan_system_sampled(
    circuit: &Circuit,
    theta: &[f64],
    hamiltonian: &Hamiltonian<'_>,
    shots: u64,
    rng: &mut impl rand::Rng,
) -> Result<McLachlanSystem> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let exact = mclachlan_system(circuit, theta, hamiltonian)?;
    let state = circuit.apply(theta)?;
    let h_phi = hamiltonian.apply(&state)?;
    let h_norm = h_phi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

    let sample = |value: f64, bound: f64, rng: &mut dyn rand::RngCore| -> f64 {
        if bound == 0.0 {
            return 0.0;
        }
        // Probability of the +1 outcome for an observable in [-bound, bound].
        let p = 0.5 * (1.0 + (value / bound).clamp(-1.0, 1.0));
        let mut hits = 0u64;
        for _ in 0..shots {
            if rand::Rng::gen::<f64>(rng) < p {
                hits += 1;
            }
        }
        bound * (2.0 * hits as f64 / shots as f64 - 1.0)
    };

    let p = circuit.params();
    let mut a = DMatrix::zeros(p, p);
    // Derivative states have norm at most 1/2, so |A_ij| <= 1/4.
    for i in 0..p {
        for j in i..p {
            let est = sample(exact.a[(i, j)], 0.25, rng);
            a[(i, j)] = est;
            a[(j, i)] = est;
        }
    }
    let c = DVector::from_iterator(
        p,
        (0..p).map(|i| sample(exact.c[i], 0.5 * h_norm, rng)),
    );
    let energy = sample(exact.energy, h_norm, rng);
    Ok(McLachlanSystem { a, c, energy })
}

/// Solve `(A + λI)·θ̇ = -C` with ridge escalation; returns the rate, the
/// residual `‖A·θ̇ + C‖` and the ridge that succeeded.
pub fn solve_rates(a: &DMatrix<f64>, c: &DVector<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let p = a.nrows();
    let mut ridge = RIDGE_BASE;
    loop {
        let regularized = a + DMatrix::identity(p, p) * ridge;
        if let Some(chol) = regularized.cholesky() {
            let rates = chol.solve(&(-c));
            if rates.iter().all(|v| v.is_finite()) {
                let residual = (a * &rates + c).norm();
                return Ok((rates, residual, ridge));
            }
        }
        ridge *= 10.0;
        if ridge > RIDGE_MAX {
            return Err(Error::SolverFailure(format!(
                "A remained singular up to ridge {RIDGE_MAX:.1e}"
            )));
        }
    }
}

/// Per-step record written to the diagnostic log.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostic {
    pub tau: f64,
    pub energy: f64,
    pub fidelity_vs_oracle: Option<f64>,
    pub solver_residual: f64,
}

/// CSV log `tau,E,fidelity_vs_oracle,solver_residual`.
pub fn diagnostics_csv(steps: &[StepDiagnostic]) -> String {
    let mut s = String::from("tau,E,fidelity_vs_oracle,solver_residual\n");
    for d in steps {
        let fid = d
            .fidelity_vs_oracle
            .map(|f| format!("{f:.12}"))
            .unwrap_or_default();
        s.push_str(&format!(
            "{:.8},{:.12e},{},{:.3e}\n",
            d.tau, d.energy, fid, d.solver_residual
        ));
    }
    s
}

/// One explicit-Euler parameter step of size `dt` (a zero step returns
/// the state unchanged). Subdivides internally whenever the update would
/// move the parameters by more than [`MAX_STEP_RADIANS`].
pub fn step(
    state: &EvolutionState,
    circuit: &Circuit,
    hamiltonian: &Hamiltonian<'_>,
    dt: f64,
) -> Result<EvolutionState> {
    let (next, _) = step_with_diagnostic(state, circuit, hamiltonian, dt)?;
    Ok(next)
}

fn step_with_diagnostic(
    state: &EvolutionState,
    circuit: &Circuit,
    hamiltonian: &Hamiltonian<'_>,
    dt: f64,
) -> Result<(EvolutionState, StepDiagnostic)> {
    if dt < 0.0 {
        return Err(Error::NonPositiveStep(dt));
    }
    let mut current = state.clone();
    let mut remaining = dt;
    let mut substeps = 0usize;
    loop {
        let system = mclachlan_system(circuit, &current.theta, hamiltonian)?;
        if dt == 0.0 {
            return Ok((
                current,
                StepDiagnostic {
                    tau: state.tau,
                    energy: system.energy,
                    fidelity_vs_oracle: None,
                    solver_residual: 0.0,
                },
            ));
        }
        let (rates, residual, _) = solve_rates(&system.a, &system.c)?;
        let speed = rates.norm();
        let dt_sub = if speed * remaining > MAX_STEP_RADIANS {
            MAX_STEP_RADIANS / speed
        } else {
            remaining
        };
        for (t, r) in current.theta.iter_mut().zip(rates.iter()) {
            *t += dt_sub * r;
        }
        current.tau += dt_sub;
        current.log_gamma -= dt_sub * system.energy;
        remaining -= dt_sub;
        substeps += 1;
        if remaining <= 1e-15 * dt {
            let diag = StepDiagnostic {
                tau: current.tau,
                energy: system.energy,
                fidelity_vs_oracle: None,
                solver_residual: residual,
            };
            return Ok((current, diag));
        }
        if substeps >= MAX_SUBSTEPS {
            return Err(Error::SolverFailure(format!(
                "parameter velocity stayed above {MAX_STEP_RADIANS} rad per step \
                 for {MAX_SUBSTEPS} substeps (|θ̇| = {speed:.3e})"
            )));
        }
    }
}

/// Whether [`evolve_segment`] tracks per-step fidelity against the exact
/// matrix-exponential flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticMode {
    Off,
    TrackOracle,
}

/// Evolve for `duration` in uniform steps of (approximately) `dt`.
///
/// `duration = k·dt` performs exactly `k` steps. With
/// [`DiagnosticMode::TrackOracle`], a reference state advanced by
/// `exp(-dt·Ĥ)` per step is carried along, and each record gets the
/// fidelity `|⟨φ(θ)|ψ_ref⟩|²`.
pub fn evolve_segment(
    state: &EvolutionState,
    circuit: &Circuit,
    hamiltonian: &Hamiltonian<'_>,
    duration: f64,
    dt: f64,
    mode: DiagnosticMode,
) -> Result<(EvolutionState, Vec<StepDiagnostic>)> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    if !(duration > 0.0) {
        return Err(Error::TimeOutOfRange {
            tau: duration,
            horizon: f64::INFINITY,
        });
    }
    let steps = (duration / dt).round().max(1.0) as usize;
    let dt_eff = duration / steps as f64;

    let mut reference = match mode {
        DiagnosticMode::Off => None,
        DiagnosticMode::TrackOracle => {
            let propagator = expm(&(-dt_eff * hamiltonian.to_dense()))?;
            let start = circuit.apply(&state.theta)?;
            let v = DVector::from_iterator(start.len(), start.amplitudes().iter().map(|a| a.re));
            Some((propagator, v))
        }
    };

    let mut current = state.clone();
    let mut log = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, mut diag) = step_with_diagnostic(&current, circuit, hamiltonian, dt_eff)?;
        if let Some((propagator, v)) = &mut reference {
            *v = &*propagator * &*v;
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::SolverFailure(
                    "oracle reference state collapsed to zero".into(),
                ));
            }
            let evolved = circuit.apply(&next.theta)?;
            let dot: f64 = evolved
                .amplitudes()
                .iter()
                .zip(v.iter())
                .map(|(a, b)| a.re * b)
                .sum();
            diag.fidelity_vs_oracle = Some((dot / norm).powi(2));
        }
        log.push(diag);
        current = next;
    }
    Ok((current, log))
}
