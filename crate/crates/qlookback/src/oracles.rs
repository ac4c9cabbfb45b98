//! Independent classical ground truths: a method-of-lines finite-difference
//! solver with explicit jump application, exact evolution by matrix
//! exponential, a Monte Carlo pricer over the monitored fixings, and the
//! closed-form Black–Scholes put for jump-free segments.
//!
//! The three numerical routes share nothing beyond the generator entries
//! (finite differences and the exponential both consume
//! [`OperatorMatrix::generator`]; Monte Carlo never sees a matrix), so
//! pairwise agreement is a meaningful check of the whole construction.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{lower_boundary, payoff, MarketParams, MonitoringSchedule, SpatialGrid};
use crate::operators::{build_hc, OperatorMatrix};

/// Which route produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Fd,
    ExpmM1,
    ExpmM2,
    Mc,
    VarqiteM1,
    VarqiteM2,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::Fd => "fd",
            Provenance::ExpmM1 => "expm-m1",
            Provenance::ExpmM2 => "expm-m2",
            Provenance::Mc => "mc",
            Provenance::VarqiteM1 => "varqite-m1",
            Provenance::VarqiteM2 => "varqite-m2",
        };
        f.write_str(s)
    }
}

/// Extracted option values `u(T, z)` with provenance metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceCurve {
    pub zs: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl PriceCurve {
    /// CSV rows `z,value,stderr,provenance`; empty stderr field when the
    /// route carries none.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,value,stderr,provenance\n");
        for (i, (&z, &v)) in self.zs.iter().zip(&self.values).enumerate() {
            let se = self
                .stderr
                .as_ref()
                .map(|e| format!("{:.17e}", e[i]))
                .unwrap_or_default();
            s.push_str(&format!("{:.17e},{:.17e},{},{}\n", z, v, se, self.provenance));
        }
        s
    }

    /// Value at a z that matches a stored point to within `1e-12`.
    pub fn value_at(&self, z: f64) -> Option<f64> {
        self.zs
            .iter()
            .position(|&p| (p - z).abs() < 1e-12)
            .map(|i| self.values[i])
    }

    /// Largest |self - other| over the common z points.
    pub fn max_abs_deviation(&self, other: &PriceCurve) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &z) in self.zs.iter().enumerate() {
            if let Some(v) = other.value_at(z) {
                worst = worst.max((self.values[i] - v).abs());
            }
        }
        worst
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Closed-form Black–Scholes European put. With strike 1 and spot `z`
/// this is the exact jump-free evolution of the payoff `(1 - z)^+` over
/// time to maturity `tau`.
pub fn bs_put(spot: f64, strike: f64, rate: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (strike - spot).max(0.0);
    }
    if spot <= 0.0 {
        return strike * (-rate * tau).exp();
    }
    let vol = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * tau) / vol;
    let d2 = d1 - vol;
    strike * (-rate * tau).exp() * normal_cdf(-d2) - spot * normal_cdf(-d1)
}

/// Dense matrix exponential with a finiteness check.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let e = m.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(e)
}

/// Exact segment evolution `exp(duration·G)·v0 = exp(-duration·Ĥ)·v0`.
pub fn expm_evolve(
    op: &OperatorMatrix,
    v0: &DVector<f64>,
    duration: f64,
) -> Result<DVector<f64>> {
    if v0.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} vs operator dimension {}",
            v0.len(),
            op.dim()
        )));
    }
    if !(duration >= 0.0) {
        return Err(Error::TimeOutOfRange {
            tau: duration,
            horizon: f64::INFINITY,
        });
    }
    if duration == 0.0 {
        return Ok(v0.clone());
    }
    let propagator = expm(&(duration * op.generator()))?;
    Ok(propagator * v0)
}

/// Monitoring-date reset `u(τ̃⁺, z_i) = z_i · u(τ̃⁻, z_λ)` for `i > λ`.
pub fn apply_jump(u: &mut DVector<f64>, grid: &SpatialGrid) {
    let pinned = u[grid.lambda()];
    for i in grid.lambda() + 1..grid.len() {
        u[i] = grid.z(i) * pinned;
    }
}

/// Time stepper for [`fd_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    Explicit,
    Implicit,
}

/// Method-of-lines reference solver.
///
/// Integrates `du/dτ = G·u` between monitoring epochs, applies the jump
/// reset at each interior epoch, and re-enforces the boundary rows
/// (`u_0 = e^{-rτ}` and the backward-difference relation at the top of
/// the grid) after every step.
pub fn fd_solve(
    params: &MarketParams,
    schedule: &MonitoringSchedule,
    grid: &SpatialGrid,
    dt: f64,
    scheme: FdScheme,
) -> Result<PriceCurve> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let g = build_hc(grid, params)?.generator();
    if scheme == FdScheme::Explicit {
        let stiff = g.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max);
        if dt * stiff > 1.0 {
            return Err(Error::Instability(format!(
                "explicit step {dt} exceeds the stability bound {:.3e}",
                1.0 / stiff
            )));
        }
    }
    let n = grid.len();
    let ratio = grid.z(n - 1) / grid.z(n - 2);
    let mut u = DVector::from_vec(payoff(grid));
    let mut tau = 0.0;

    let epochs = schedule.epochs();
    for (j, window) in epochs.windows(2).enumerate() {
        let duration = window[1] - window[0];
        let steps = (duration / dt).round().max(1.0) as usize;
        let dt_eff = duration / steps as f64;
        let implicit_lu = match scheme {
            FdScheme::Implicit => Some((DMatrix::identity(n, n) - dt_eff * &g).lu()),
            FdScheme::Explicit => None,
        };
        for _ in 0..steps {
            match &implicit_lu {
                Some(lu) => {
                    u = lu.solve(&u).ok_or_else(|| {
                        Error::SolverFailure("implicit finite-difference solve failed".into())
                    })?;
                }
                None => {
                    u += dt_eff * (&g * &u);
                }
            }
            tau += dt_eff;
            u[0] = lower_boundary(tau, params);
            u[n - 1] = ratio * u[n - 2];
            let worst = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if !worst.is_finite() || worst > 1e8 {
                return Err(Error::Instability(format!(
                    "norm blow-up at τ = {tau:.6} (max |u| = {worst:.3e})"
                )));
            }
        }
        // Interior epochs reset the tail; the horizon does not.
        if j + 1 < epochs.len() - 1 {
            apply_jump(&mut u, grid);
        }
    }
    Ok(PriceCurve {
        zs: grid.points().to_vec(),
        values: u.iter().copied().collect(),
        stderr: None,
        provenance: Provenance::Fd,
    })
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    /// Extra sub-steps per interval for diagnostic path plots; pricing
    /// itself draws exact transitions at the monitoring dates only.
    pub steps_per_interval: u32,
    pub antithetic: bool,
    /// Fold the final fixing into the running maximum (payoff-equivalent
    /// either way; both conventions kept for cross-checks).
    pub include_final_fixing: bool,
}

impl McConfig {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            steps_per_interval: 1,
            antithetic: true,
            include_final_fixing: true,
        }
    }
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over the packed identifiers
    let mut x = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

const MC_CHUNK: u64 = 16_384;

/// Monte Carlo price of `u(T, z)` at the requested z points.
///
/// Each path starts from `S_0 = s_0` with running maximum `y = s_0 / z`,
/// draws exact lognormal transitions at the monitoring dates, updates the
/// maximum at interior dates (and at maturity when configured), and
/// discounts `(Y_T - S_T)^+ / y`. The `z = 0` point is the boundary value
/// `e^{-rT}` exactly. Chunked counter-seeded substreams make the result
/// independent of the worker count.
pub fn mc_price(
    params: &MarketParams,
    schedule: &MonitoringSchedule,
    config: &McConfig,
    z_eval: &[f64],
) -> Result<PriceCurve> {
    if config.paths < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 paths, got {}",
            config.paths
        )));
    }
    if (schedule.horizon() - params.maturity()).abs() > 1e-12 {
        return Err(Error::InvalidSchedule(
            "schedule horizon does not match the maturity".into(),
        ));
    }
    let mut values = Vec::with_capacity(z_eval.len());
    let mut errs = Vec::with_capacity(z_eval.len());
    for (zi, &z) in z_eval.iter().enumerate() {
        if !(z >= 0.0) {
            return Err(Error::InvalidParams(format!("z must be >= 0, got {z}")));
        }
        if z == 0.0 {
            values.push(lower_boundary(params.maturity(), params));
            errs.push(0.0);
            continue;
        }
        let (mean, se) = mc_single_z(params, schedule, config, z, zi as u64);
        values.push(mean);
        errs.push(se);
    }
    Ok(PriceCurve {
        zs: z_eval.to_vec(),
        values,
        stderr: Some(errs),
        provenance: Provenance::Mc,
    })
}

fn mc_single_z(
    params: &MarketParams,
    schedule: &MonitoringSchedule,
    config: &McConfig,
    z: f64,
    z_index: u64,
) -> (f64, f64) {
    let samples = if config.antithetic {
        (config.paths / 2).max(1)
    } else {
        config.paths
    };
    let n_chunks = samples.div_ceil(MC_CHUNK);
    let intervals = schedule.num_intervals();
    let dt = schedule.horizon() / intervals as f64;
    let drift = (params.rate - 0.5 * params.sigma * params.sigma) * dt;
    let vol = params.sigma * dt.sqrt();
    let discount = (-params.rate * params.maturity()).exp();
    let y0 = params.spot / z;

    let run_path = |rng: &mut ChaCha8Rng, flip: f64| -> f64 {
        let mut s = params.spot;
        let mut y = y0;
        for j in 1..=intervals {
            let xi: f64 = rng.sample(StandardNormal);
            s *= (drift + vol * flip * xi).exp();
            if j < intervals || config.include_final_fixing {
                y = y.max(s);
            }
        }
        discount * (y - s).max(0.0) / y0
    };

    let partials: Vec<(f64, f64, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, z_index, chunk));
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..count {
                let sample = if config.antithetic {
                    // Re-run the same normals with flipped signs.
                    let mut mirror = rng.clone();
                    let a = run_path(&mut rng, 1.0);
                    let b = run_path(&mut mirror, -1.0);
                    0.5 * (a + b)
                } else {
                    run_path(&mut rng, 1.0)
                };
                sum += sample;
                sumsq += sample * sample;
            }
            (sum, sumsq, count)
        })
        .collect();

    let (mut sum, mut sumsq, mut count) = (0.0, 0.0, 0u64);
    for (s, s2, c) in partials {
        sum += s;
        sumsq += s2;
        count += c;
    }
    let mean = sum / count as f64;
    let var = (sumsq / count as f64 - mean * mean).max(0.0);
    let se = (var / count as f64).sqrt();
    (mean, se)
}

/// Sampled path of `(t, S_t, Y_t)` for diagnostics, with
/// `steps_per_interval` sub-steps between monitoring dates. The maximum
/// still updates only at monitoring dates.
pub fn sample_path(
    params: &MarketParams,
    schedule: &MonitoringSchedule,
    config: &McConfig,
    z: f64,
    path_index: u64,
) -> Vec<(f64, f64, f64)> {
    let sub = config.steps_per_interval.max(1) as usize;
    let intervals = schedule.num_intervals();
    let dt = schedule.horizon() / (intervals as f64 * sub as f64);
    let drift = (params.rate - 0.5 * params.sigma * params.sigma) * dt;
    let vol = params.sigma * dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, u64::MAX, path_index));
    let mut s = params.spot;
    let mut y = params.spot / z;
    let mut out = vec![(0.0, s, y)];
    for j in 1..=intervals {
        for k in 1..=sub {
            let xi: f64 = rng.sample(StandardNormal);
            s *= (drift + vol * xi).exp();
            let t = ((j - 1) * sub + k) as f64 * dt;
            if k == sub && (j < intervals || config.include_final_fixing) {
                y = y.max(s);
            }
            out.push((t, s, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup() -> (SpatialGrid, MarketParams, MonitoringSchedule) {
        let params = MarketParams::new(0.05, 0.2, 100.0, 2).unwrap();
        let schedule = MonitoringSchedule::annual(&params).unwrap();
        (SpatialGrid::new(16, 2.5).unwrap(), params, schedule)
    }

    #[test]
    fn expm_scalar_and_semigroup() {
        let (grid, params, _) = setup();
        let hc = build_hc(&grid, &params).unwrap();
        let v0 = DVector::from_vec(payoff(&grid));
        assert_eq!(expm_evolve(&hc, &v0, 0.0).unwrap(), v0);

        let half = expm_evolve(&hc, &v0, 0.5).unwrap();
        let full_via_half = expm_evolve(&hc, &half, 0.5).unwrap();
        let full = expm_evolve(&hc, &v0, 1.0).unwrap();
        assert!((full_via_half - full).amax() <= 1e-10);

        // Scalar generator: r·I in Hamiltonian form decays as e^{-rτ}.
        let n = grid.len();
        let scalar = DMatrix::<f64>::identity(n, n) * (-0.05);
        let prop = expm(&scalar).unwrap();
        let out = prop * &v0;
        for i in 0..n {
            assert_relative_eq!(out[i], (-0.05f64).exp() * v0[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(expm(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn fd_boundary_value_is_discount_factor() {
        let (grid, params, schedule) = setup();
        let curve = fd_solve(&params, &schedule, &grid, 1e-3, FdScheme::Implicit).unwrap();
        assert_relative_eq!(curve.values[0], (-0.1f64).exp(), epsilon = 1e-12);
        assert!(curve.values.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn fd_degenerate_dynamics_keep_payoff() {
        let grid = SpatialGrid::new(16, 2.5).unwrap();
        let params = MarketParams::new(0.0, 1e-8, 100.0, 2).unwrap();
        let schedule = MonitoringSchedule::annual(&params).unwrap();
        let curve = fd_solve(&params, &schedule, &grid, 1e-3, FdScheme::Implicit).unwrap();
        for (i, &z) in grid.points().iter().enumerate() {
            assert_relative_eq!(curve.values[i], (1.0 - z).max(0.0), epsilon = 1e-6);
        }
    }

    #[test]
    fn fd_explicit_rejects_unstable_step() {
        let (grid, params, schedule) = setup();
        let err = fd_solve(&params, &schedule, &grid, 0.5, FdScheme::Explicit);
        assert!(matches!(err, Err(Error::Instability(_))));
        // A stable step works and agrees with the implicit route.
        let a = fd_solve(&params, &schedule, &grid, 1e-4, FdScheme::Explicit).unwrap();
        let b = fd_solve(&params, &schedule, &grid, 1e-4, FdScheme::Implicit).unwrap();
        assert!(a.max_abs_deviation(&b) < 1e-3);
    }

    #[test]
    fn fd_and_expm_agree_on_jump_free_segment() {
        let (grid, params, _) = setup();
        let dt = 1e-4;
        let g = build_hc(&grid, &params).unwrap();
        let mut u = DVector::from_vec(payoff(&grid));
        let steps = (1.0 / dt) as usize;
        let gen = g.generator();
        let n = grid.len();
        let ratio = grid.z(n - 1) / grid.z(n - 2);
        let mut tau = 0.0;
        for _ in 0..steps {
            u += dt * (&gen * &u);
            tau += dt;
            u[0] = lower_boundary(tau, &params);
            u[n - 1] = ratio * u[n - 2];
        }
        let exact = expm_evolve(&g, &DVector::from_vec(payoff(&grid)), 1.0).unwrap();
        assert!((u - exact).amax() <= 10.0 * dt);
    }

    #[test]
    fn fd_converges_to_black_scholes_put_on_jump_free_interval() {
        // Sign-convention validation: evolving the payoff under G for one
        // year must converge, with second-order rate, to the closed-form
        // put value with strike 1.
        let params = MarketParams::new(0.05, 0.2, 100.0, 2).unwrap();
        let mut errors = Vec::new();
        for &n in &[61usize, 121, 241] {
            let grid = SpatialGrid::new(n, 2.5).unwrap();
            let g = build_hc(&grid, &params).unwrap();
            let u = expm_evolve(&g, &DVector::from_vec(payoff(&grid)), 1.0).unwrap();
            // Compare away from the truncated upper boundary.
            let mut worst: f64 = 0.0;
            for (i, &z) in grid.points().iter().enumerate() {
                if z <= 1.8 {
                    worst = worst.max((u[i] - bs_put(z, 1.0, 0.05, 0.2, 1.0)).abs());
                }
            }
            errors.push(worst);
        }
        let r1 = errors[0] / errors[1];
        let r2 = errors[1] / errors[2];
        assert!(
            (3.0..5.0).contains(&r1) && (3.0..5.0).contains(&r2),
            "convergence ratios {r1:.2}, {r2:.2} (errors {errors:?})"
        );
    }

    #[test]
    fn put_formula_satisfies_parity_and_limits() {
        let (r, sigma, tau) = (0.05, 0.2, 1.0);
        // Put-call parity with the call from the same normal CDF.
        for &spot in &[0.5, 1.0, 1.7] {
            let put = bs_put(spot, 1.0, r, sigma, tau);
            let vol = sigma * tau.sqrt();
            let d1 = (spot.ln() + (r + 0.5 * sigma * sigma) * tau) / vol;
            let d2 = d1 - vol;
            let call = spot * normal_cdf(d1) - (-r * tau).exp() * normal_cdf(d2);
            assert_relative_eq!(
                call - put,
                spot - (-r * tau).exp(),
                epsilon = 1e-12
            );
        }
        // Degenerate limits.
        assert_relative_eq!(bs_put(0.7, 1.0, r, sigma, 0.0), 0.3);
        assert_relative_eq!(bs_put(0.0, 1.0, r, sigma, tau), (-r * tau).exp());
        // Monotone in volatility.
        assert!(bs_put(1.0, 1.0, r, 0.3, tau) > bs_put(1.0, 1.0, r, 0.2, tau));
        // Against a quick European Monte Carlo estimate.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let paths = 400_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..paths {
            let xi: f64 = rng.sample(StandardNormal);
            let s_t = ((r - 0.5 * sigma * sigma) * tau + sigma * tau.sqrt() * xi).exp();
            let v = (-r * tau).exp() * (1.0 - s_t).max(0.0);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / paths as f64;
        let se = ((sumsq / paths as f64 - mean * mean) / paths as f64).sqrt();
        let exact = bs_put(1.0, 1.0, r, sigma, tau);
        assert!(
            (exact - mean).abs() <= 4.0 * se,
            "closed form {exact} vs MC {mean} ± {se}"
        );
    }

    #[test]
    fn mc_boundary_and_degenerate_cases() {
        let (_, params, schedule) = setup();
        let config = McConfig::new(20_000, 42);
        let curve = mc_price(&params, &schedule, &config, &[0.0]).unwrap();
        assert_relative_eq!(curve.values[0], (-0.1f64).exp(), epsilon = 1e-15);

        // Deterministic upward drift with the final fixing included:
        // Y_T = S_T at z = 1, so the payoff is 0.
        let det = MarketParams::new(0.05, 1e-12, 100.0, 2).unwrap();
        let sched = MonitoringSchedule::annual(&det).unwrap();
        let curve = mc_price(&det, &sched, &config, &[1.0]).unwrap();
        assert!(curve.values[0].abs() < 1e-12);

        // z → 0 approaches the discount factor.
        let curve = mc_price(&params, &schedule, &config, &[1e-6]).unwrap();
        assert_relative_eq!(curve.values[0], (-0.1f64).exp(), epsilon = 1e-4);
    }

    #[test]
    fn mc_is_deterministic_and_worker_independent() {
        let (_, params, schedule) = setup();
        let config = McConfig::new(30_000, 7);
        let a = mc_price(&params, &schedule, &config, &[0.8, 1.2]).unwrap();
        let b = mc_price(&params, &schedule, &config, &[0.8, 1.2]).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn mc_standard_error_scales_with_paths() {
        let (_, params, schedule) = setup();
        let small = mc_price(&params, &schedule, &McConfig::new(20_000, 11), &[1.0]).unwrap();
        let large = mc_price(&params, &schedule, &McConfig::new(80_000, 11), &[1.0]).unwrap();
        let ratio = small.stderr.as_ref().unwrap()[0] / large.stderr.as_ref().unwrap()[0];
        assert!((1.7..2.3).contains(&ratio), "stderr ratio {ratio}");
    }

    #[test]
    fn mc_final_fixing_flag_is_payoff_equivalent() {
        let (_, params, schedule) = setup();
        let mut config = McConfig::new(40_000, 3);
        let with = mc_price(&params, &schedule, &config, &[0.7, 1.0, 1.4]).unwrap();
        config.include_final_fixing = false;
        let without = mc_price(&params, &schedule, &config, &[0.7, 1.0, 1.4]).unwrap();
        // Identical draws, identical payoffs path by path.
        assert_eq!(with.values, without.values);
    }

    #[test]
    fn price_curve_csv_shape() {
        let curve = PriceCurve {
            zs: vec![0.0, 0.5],
            values: vec![1.0, 0.6],
            stderr: None,
            provenance: Provenance::Fd,
        };
        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "z,value,stderr,provenance");
        assert!(lines[1].ends_with(",fd"));
    }

    #[test]
    fn sample_path_has_expected_shape() {
        let (_, params, schedule) = setup();
        let mut config = McConfig::new(10, 5);
        config.steps_per_interval = 4;
        let path = sample_path(&params, &schedule, &config, 1.0, 0);
        assert_eq!(path.len(), 1 + 2 * 4);
        assert_eq!(path[0].0, 0.0);
        assert_relative_eq!(path.last().unwrap().0, 2.0, epsilon = 1e-12);
        // The recorded maximum never decreases.
        for w in path.windows(2) {
            assert!(w[1].2 >= w[0].2 - 1e-15);
        }
    }
}
