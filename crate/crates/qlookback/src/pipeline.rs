//! End-to-end pricing runs: initial-parameter fit, segment-wise evolution
//! under either formulation and either engine, and boundary-anchored
//! price extraction.
//!
//! The extracted curve is scale-invariant: whatever normalization the
//! evolution loses, the known boundary value `u(τ, 0) = e^{-rτ}` anchors
//! it back, using the amplitude of basis state `|0…0⟩` (grid slot
//! `z = 0`, which in the stacked method-2 layout is block 0, index 0).

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{lower_boundary, payoff, MarketParams, MonitoringSchedule, SpatialGrid};
use crate::operators::{assemble_m2_segment, build_hc, build_hj, m2_block_count};
use crate::optim::{minimize, BfgsOptions};
use crate::oracles::{expm, PriceCurve, Provenance};
use crate::qsim::{build_ansatz, encode_state, Circuit, Statevector};
use crate::varqite::{evolve_segment, DiagnosticMode, EvolutionState, Hamiltonian, StepDiagnostic};

/// Jump-handling formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    M1,
    M2,
}

/// Evolution engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Varqite,
    Expm,
}

/// Ansatz size: register width and parameter budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnsatzSpec {
    pub qubits: usize,
    pub params: usize,
}

/// Overlap estimation mode recorded with a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    Exact,
    Shots(u64),
}

/// Options for the initial-parameter fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitOptions {
    /// Success threshold on the cost `1 - P₀`.
    pub threshold: f64,
    /// Random restarts tried after the deterministic start.
    pub max_restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            threshold: 1e-6,
            max_restarts: 24,
            max_iters: 3000,
            seed: 0x5eed,
        }
    }
}

/// Fit result: best parameters found and the cost reached.
#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub evaluations: usize,
}

/// Quasi-Newton minimization of `C(θ) = 1 - |⟨target|φ(θ)⟩|²`.
///
/// Starts from `theta0` when given (zeros otherwise) and retries from
/// seeded random points until the cost drops below the threshold or the
/// restart budget is exhausted; the best parameters found are always
/// returned, with `converged` telling whether the threshold was met.
pub fn fit_initial_params(
    circuit: &Circuit,
    target: &Statevector,
    theta0: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<Fit> {
    let target = target.normalized()?;
    if target.qubits() != circuit.qubits() {
        return Err(Error::DimensionMismatch(format!(
            "target on {} qubits, circuit on {}",
            target.qubits(),
            circuit.qubits()
        )));
    }
    let p = circuit.params();
    let objective = |x: &[f64]| {
        let (o, go) = circuit
            .overlap_gradient(x, &target)
            .expect("dimensions checked above");
        let grad = go.iter().map(|g| -2.0 * o * g).collect();
        (1.0 - o * o, grad)
    };
    let bfgs = BfgsOptions {
        max_iters: opts.max_iters,
        grad_tol: 1e-12,
        // Aim an order of magnitude below the acceptance threshold.
        cost_tol: opts.threshold * 0.1,
    };

    let mut best: Option<Fit> = None;
    let mut evaluations = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for restart in 0..=opts.max_restarts {
        let start: Vec<f64> = match (restart, theta0) {
            (0, Some(t0)) => {
                if t0.len() != p {
                    return Err(Error::ParameterCount {
                        got: t0.len(),
                        expected: p,
                    });
                }
                t0.to_vec()
            }
            (0, None) => vec![0.0; p],
            _ => (0..p)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        };
        let out = minimize(objective, &start, &bfgs);
        evaluations += out.evaluations;
        let candidate = Fit {
            theta: out.x,
            cost: out.cost,
            converged: out.cost < opts.threshold,
            restarts_used: restart,
            evaluations,
        };
        let better = best.as_ref().map(|b| candidate.cost < b.cost).unwrap_or(true);
        if better {
            best = Some(candidate);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let mut fit = best.expect("at least one start ran");
    fit.evaluations = evaluations;
    Ok(fit)
}

/// Full description of one pricing run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub method: Method,
    pub engine: Engine,
    pub params: MarketParams,
    pub schedule: MonitoringSchedule,
    pub grid: SpatialGrid,
    pub ansatz: AnsatzSpec,
    /// Parameter step for the continuous segments.
    pub dt: f64,
    /// Jump-window length (method 1).
    pub h: f64,
    pub shots: ShotMode,
    pub seed: u64,
    /// Re-fit the ansatz against the exactly evolved reference at each
    /// method-2 segment boundary (oracle-assisted mode). In pure mode the
    /// parameters carry over continuously.
    pub refit_segments: bool,
    /// Track per-step fidelity against the matrix-exponential flow.
    pub track_oracle: bool,
    pub fit: FitOptions,
}

impl RunSpec {
    pub fn new(
        method: Method,
        engine: Engine,
        params: MarketParams,
        grid: SpatialGrid,
        ansatz_params: usize,
    ) -> Result<Self> {
        let schedule = MonitoringSchedule::annual(&params)?;
        let qubits = required_qubits(method, &grid, &schedule)?;
        Ok(Self {
            method,
            engine,
            params,
            schedule,
            grid,
            ansatz: AnsatzSpec {
                qubits,
                params: ansatz_params,
            },
            dt: 0.01,
            h: crate::operators::DEFAULT_JUMP_WINDOW,
            shots: ShotMode::Exact,
            seed: 7,
            refit_segments: false,
            track_oracle: false,
            fit: FitOptions::default(),
        })
    }

    /// Check internal consistency (register widths, step sizes, horizon).
    pub fn validate(&self) -> Result<()> {
        let required = required_qubits(self.method, &self.grid, &self.schedule)?;
        if self.ansatz.qubits != required {
            return Err(Error::InvalidRunSpec(format!(
                "{:?} on this grid/schedule needs {} qubits, ansatz has {}",
                self.method, required, self.ansatz.qubits
            )));
        }
        if (self.schedule.horizon() - self.params.maturity()).abs() > 1e-12 {
            return Err(Error::InvalidRunSpec(
                "schedule horizon differs from the maturity".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::NonPositiveStep(self.dt));
        }
        let interval = self.schedule.horizon() / self.schedule.num_intervals() as f64;
        if self.method == Method::M1 && !(self.h > 0.0 && self.h < interval) {
            return Err(Error::InvalidRunSpec(format!(
                "jump window {} outside (0, {})",
                self.h, interval
            )));
        }
        Ok(())
    }
}

/// Qubits needed to encode the evolving state.
pub fn required_qubits(
    method: Method,
    grid: &SpatialGrid,
    schedule: &MonitoringSchedule,
) -> Result<usize> {
    let m = grid.qubits().ok_or_else(|| {
        Error::InvalidRunSpec(format!(
            "grid size {} is not a power of two",
            grid.len()
        ))
    })? as usize;
    Ok(match method {
        Method::M1 => m,
        Method::M2 => m + m2_block_count(schedule).trailing_zeros() as usize,
    })
}

/// Per-segment diagnostics kept in the run manifest.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub index: usize,
    pub operator: String,
    pub duration: f64,
    pub steps: usize,
    pub final_energy: Option<f64>,
    pub max_residual: Option<f64>,
    pub min_fidelity_vs_oracle: Option<f64>,
}

impl SegmentReport {
    fn from_log(index: usize, operator: &str, duration: f64, log: &[StepDiagnostic]) -> Self {
        Self {
            index,
            operator: operator.to_string(),
            duration,
            steps: log.len(),
            final_energy: log.last().map(|d| d.energy),
            max_residual: log
                .iter()
                .map(|d| d.solver_residual)
                .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r)))),
            min_fidelity_vs_oracle: log
                .iter()
                .filter_map(|d| d.fidelity_vs_oracle)
                .fold(None, |m: Option<f64>, f| Some(m.map_or(f, |m| m.min(f)))),
        }
    }

    fn exact(index: usize, operator: &str, duration: f64) -> Self {
        Self {
            index,
            operator: operator.to_string(),
            duration,
            steps: 1,
            final_energy: None,
            max_residual: None,
            min_fidelity_vs_oracle: None,
        }
    }
}

/// Everything a run reports besides the curve itself.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub spec: RunSpec,
    pub fit: Option<Fit>,
    pub segments: Vec<SegmentReport>,
    /// Wall-clock time; excluded from serialized artifacts so identical
    /// configurations produce byte-identical files.
    #[serde(skip)]
    pub wall_ms: u128,
}

/// Output of [`run_m1`] / [`run_m2`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub curve: PriceCurve,
    /// Raw evolved vector before anchoring (length `n` for method 1,
    /// stacked length for method 2).
    pub final_state: Vec<f64>,
    /// Per-step records across all segments (variational engine only).
    pub step_log: Vec<StepDiagnostic>,
    pub manifest: RunManifest,
}

/// Anchor a raw state to the boundary value and build the curve:
/// `u(T, z⃗) = (e^{-rT} / state[0]) · state`.
pub fn extract_price(
    state: &[f64],
    params: &MarketParams,
    zs: &[f64],
    provenance: Provenance,
) -> Result<PriceCurve> {
    if state.len() != zs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} state entries vs {} grid points",
            state.len(),
            zs.len()
        )));
    }
    let anchor_amp = state[0];
    if anchor_amp.abs() < 1e-9 {
        return Err(Error::ExtractionAnchor(anchor_amp.abs()));
    }
    let scale = lower_boundary(params.maturity(), params) / anchor_amp;
    Ok(PriceCurve {
        zs: zs.to_vec(),
        values: state.iter().map(|v| v * scale).collect(),
        stderr: None,
        provenance,
    })
}

/// Collapse a stacked method-2 state onto the grid: entries `0..=λ` come
/// from block 0, entries `λ+1..n` from block `N-1`.
pub fn m2_collapse(stacked: &[f64], grid: &SpatialGrid, n_intervals: usize) -> Vec<f64> {
    let n = grid.len();
    let last = n_intervals - 1;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&stacked[..=grid.lambda()]);
    out.extend_from_slice(&stacked[last * n + grid.lambda() + 1..last * n + n]);
    out
}

/// Sequential evolution with a jump operator window before each interior
/// epoch, then extraction.
pub fn run_m1(spec: &RunSpec) -> Result<RunOutput> {
    let started = std::time::Instant::now();
    spec.validate()?;
    if spec.method != Method::M1 {
        return Err(Error::InvalidRunSpec("run_m1 called with method m2".into()));
    }
    let grid = &spec.grid;
    let hc = build_hc(grid, &spec.params)?;
    let hj = build_hj(grid, &spec.params, spec.h)?;
    let interior: Vec<f64> = spec.schedule.interior().to_vec();
    let horizon = spec.schedule.horizon();

    let mut segments = Vec::new();
    let mut fit_report = None;
    let mut step_log: Vec<StepDiagnostic> = Vec::new();
    let final_state: Vec<f64> = match spec.engine {
        Engine::Expm => {
            let g_c = hc.generator();
            let g_j = hj.generator();
            let mut u = DVector::from_vec(payoff(grid));
            let mut tau = 0.0;
            for (k, &epoch) in interior.iter().enumerate() {
                let duration = epoch - spec.h - tau;
                u = expm(&(duration * &g_c)).map(|p| p * &u).map_err(|e| e.in_segment(k))?;
                segments.push(SegmentReport::exact(segments.len(), "continuous", duration));
                // The jump operator acts through its defining one-step map.
                u = &u + spec.h * (&g_j * &u);
                segments.push(SegmentReport::exact(segments.len(), "jump-window", spec.h));
                tau = epoch;
            }
            let duration = horizon - tau;
            u = expm(&(duration * &g_c))
                .map(|p| p * &u)
                .map_err(|e| e.in_segment(interior.len()))?;
            segments.push(SegmentReport::exact(segments.len(), "continuous", duration));
            u.iter().copied().collect()
        }
        Engine::Varqite => {
            let circuit = build_ansatz(spec.ansatz.qubits, spec.ansatz.params)?;
            let target = encode_state(&payoff(grid), spec.ansatz.qubits)?;
            let fit = fit_initial_params(&circuit, &target, None, &spec.fit)?;
            if !fit.converged {
                return Err(Error::FitThreshold {
                    cost: fit.cost,
                    threshold: spec.fit.threshold,
                    restarts: fit.restarts_used,
                });
            }
            let mode = if spec.track_oracle {
                DiagnosticMode::TrackOracle
            } else {
                DiagnosticMode::Off
            };
            let hc_h = hc.hamiltonian();
            let hj_h = hj.hamiltonian();
            let mut state = EvolutionState::new(fit.theta.clone());
            fit_report = Some(fit);
            for (k, &epoch) in interior.iter().enumerate() {
                let duration = epoch - spec.h - state.tau;
                let (next, log) = evolve_segment(
                    &state,
                    &circuit,
                    &Hamiltonian::Dense(&hc_h),
                    duration,
                    spec.dt,
                    mode,
                )
                .map_err(|e| e.in_segment(k))?;
                segments.push(SegmentReport::from_log(
                    segments.len(),
                    "continuous",
                    duration,
                    &log,
                ));
                step_log.extend(log);
                // Keep at least five parameter steps inside the window.
                let (next, log) = evolve_segment(
                    &next,
                    &circuit,
                    &Hamiltonian::Dense(&hj_h),
                    spec.h,
                    spec.h / 5.0,
                    mode,
                )
                .map_err(|e| e.in_segment(k))?;
                segments.push(SegmentReport::from_log(
                    segments.len(),
                    "jump-window",
                    spec.h,
                    &log,
                ));
                step_log.extend(log);
                state = next;
            }
            let duration = horizon - state.tau;
            let (state, log) = evolve_segment(
                &state,
                &circuit,
                &Hamiltonian::Dense(&hc_h),
                duration,
                spec.dt,
                mode,
            )
            .map_err(|e| e.in_segment(interior.len()))?;
            segments.push(SegmentReport::from_log(
                segments.len(),
                "continuous",
                duration,
                &log,
            ));
            step_log.extend(log);
            circuit.apply(&state.theta)?.real_parts()
        }
    };

    let curve = extract_price(
        &final_state,
        &spec.params,
        grid.points(),
        match spec.engine {
            Engine::Expm => Provenance::ExpmM1,
            Engine::Varqite => Provenance::VarqiteM1,
        },
    )?;
    Ok(RunOutput {
        curve,
        final_state,
        step_log,
        manifest: RunManifest {
            spec: spec.clone(),
            fit: fit_report,
            segments,
            wall_ms: started.elapsed().as_millis(),
        },
    })
}

/// Stacked multi-function evolution with one continuous operator per
/// segment, then element bookkeeping and extraction.
pub fn run_m2(spec: &RunSpec) -> Result<RunOutput> {
    let started = std::time::Instant::now();
    spec.validate()?;
    if spec.method != Method::M2 {
        return Err(Error::InvalidRunSpec("run_m2 called with method m1".into()));
    }
    let grid = &spec.grid;
    let n = grid.len();
    let n_intervals = spec.schedule.num_intervals();
    let dim = n * m2_block_count(&spec.schedule);
    let mut initial = payoff(grid);
    initial.resize(dim, 0.0);
    let epochs = spec.schedule.epochs().to_vec();

    let mut segments = Vec::new();
    let mut fit_report = None;
    let mut step_log: Vec<StepDiagnostic> = Vec::new();
    let final_state: Vec<f64> = match spec.engine {
        Engine::Expm => {
            let mut u = DVector::from_vec(initial);
            for j in 0..n_intervals {
                let duration = epochs[j + 1] - epochs[j];
                let op = assemble_m2_segment(j, grid, &spec.params, &spec.schedule)
                    .map_err(|e| e.in_segment(j))?;
                u = expm(&(duration * op.generator()))
                    .map(|p| p * &u)
                    .map_err(|e| e.in_segment(j))?;
                segments.push(SegmentReport::exact(j, &format!("segment-{j}"), duration));
            }
            u.iter().copied().collect()
        }
        Engine::Varqite => {
            let circuit = build_ansatz(spec.ansatz.qubits, spec.ansatz.params)?;
            let target = encode_state(&initial, spec.ansatz.qubits)?;
            let fit = fit_initial_params(&circuit, &target, None, &spec.fit)?;
            if !fit.converged {
                return Err(Error::FitThreshold {
                    cost: fit.cost,
                    threshold: spec.fit.threshold,
                    restarts: fit.restarts_used,
                });
            }
            let mode = if spec.track_oracle {
                DiagnosticMode::TrackOracle
            } else {
                DiagnosticMode::Off
            };
            let mut state = EvolutionState::new(fit.theta.clone());
            fit_report = Some(fit);
            // Exact reference for oracle-assisted re-fitting.
            let mut reference = spec
                .refit_segments
                .then(|| DVector::from_vec({
                    let mut v = payoff(grid);
                    v.resize(dim, 0.0);
                    v
                }));
            for j in 0..n_intervals {
                let duration = epochs[j + 1] - epochs[j];
                let op = assemble_m2_segment(j, grid, &spec.params, &spec.schedule)
                    .map_err(|e| e.in_segment(j))?;
                let h_eff = op.hamiltonian();
                let (next, log) = evolve_segment(
                    &state,
                    &circuit,
                    &Hamiltonian::Dense(&h_eff),
                    duration,
                    spec.dt,
                    mode,
                )
                .map_err(|e| e.in_segment(j))?;
                segments.push(SegmentReport::from_log(
                    j,
                    &format!("segment-{j}"),
                    duration,
                    &log,
                ));
                step_log.extend(log);
                state = next;
                if let Some(reference_state) = &mut reference {
                    *reference_state = expm(&(duration * op.generator()))
                        .map(|p| &p * &*reference_state)
                        .map_err(|e| e.in_segment(j))?;
                    if j + 1 < n_intervals {
                        let target =
                            encode_state(reference_state.as_slice(), spec.ansatz.qubits)?;
                        let refit =
                            fit_initial_params(&circuit, &target, Some(&state.theta), &spec.fit)?;
                        state.theta = refit.theta;
                    }
                }
            }
            circuit.apply(&state.theta)?.real_parts()
        }
    };

    let collapsed = m2_collapse(&final_state, grid, n_intervals);
    let curve = extract_price(
        &collapsed,
        &spec.params,
        grid.points(),
        match spec.engine {
            Engine::Expm => Provenance::ExpmM2,
            Engine::Varqite => Provenance::VarqiteM2,
        },
    )?;
    Ok(RunOutput {
        curve,
        final_state,
        step_log,
        manifest: RunManifest {
            spec: spec.clone(),
            fit: fit_report,
            segments,
            wall_ms: started.elapsed().as_millis(),
        },
    })
}

/// Dispatch on the spec's method.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    match spec.method {
        Method::M1 => run_m1(spec),
        Method::M2 => run_m2(spec),
    }
}
