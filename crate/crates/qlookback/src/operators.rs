//! Finite-difference evolution operators for the reduced lookback PDE.
//!
//! Every operator is stored in its textbook display form (`entries`), and
//! each carries a role tag from which the true evolution generator is
//! recovered. The displays mix two sign conventions: the lower-boundary
//! row appears as `+r` (Hamiltonian form, matching the propagator
//! `exp(-τ·Ĥ)`), while the interior stencil rows and the method-2 blocks
//! are written directly in generator form (`du/dτ = G·u`), and the jump
//! operator's relaxation diagonal is displayed as `+1/h` where the
//! generator needs `-1/h`. [`OperatorMatrix::generator`] owns this
//! resolution in one place; it is validated by convergence against the
//! closed-form Black–Scholes solution on jump-free intervals and by the
//! one-step jump-equivalence tests.
//!
//! Zero-based indices are used throughout; display positions quoted from
//! one-based matrix layouts are translated here and unit-tested against
//! the printed patterns.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::market::{MarketParams, MonitoringSchedule, SpatialGrid};

/// Default jump-window length in years.
pub const DEFAULT_JUMP_WINDOW: f64 = 1e-3;

/// Reading of the off-center jump-row weights `a_i`, `c_i`.
///
/// The display puts `σ²/Δ_z` inside a parenthesis that already carries a
/// `1/(2Δ_z)` prefactor, so the total is `σ²/(2Δ_z²)`; this is exactly the
/// central-difference discretization and is the default. The alternative
/// squares the spacing inside the parenthesis as well and survives only as
/// a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpWeightConvention {
    #[default]
    AsPrinted,
    SquaredSpacing,
}

/// Interior drift–diffusion stencil weights at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Jump-row weights for rows below the pinned index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRowWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Role of a constructed operator; drives the sign resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    /// Continuous-evolution operator on the plain grid.
    Hc,
    /// Jump operator with window `h`; `lambda` is the pinned index.
    Hj { h: f64, lambda: usize },
    /// Auxiliary-function source operator `H_U = H_UW + H_UE`.
    Hu,
    /// West part of `H_U` (columns `λ-1`, `λ`).
    Huw,
    /// East part of `H_U` (column `λ+1`).
    Hue,
    /// North-west block of the split continuous operator.
    Hcnw,
    /// South-east block of the split continuous operator.
    Hcse,
    /// Single-entry north-east coupling block.
    Hcne,
    /// Single-entry south-west coupling block.
    Hcsw,
    /// Stacked method-2 operator for one monitoring segment.
    M2Segment { segment: usize },
}

/// Dense real evolution operator together with its role tag.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    role: Role,
    entries: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Entries exactly as displayed.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// True evolution generator `G` with `du/dτ = G·u`.
    ///
    /// Resolution per role: the lower-boundary row is negated wherever the
    /// display carries it in `+r` form (`H_C`, `H_CNW`, method-2 segments),
    /// and the jump operator's `+1/h` relaxation diagonal becomes `-1/h`.
    /// Pure-generator blocks (`H_U` family, `H_CSE`, `H_CSW`, `H_CNE`) pass
    /// through unchanged.
    pub fn generator(&self) -> DMatrix<f64> {
        let mut g = self.entries.clone();
        match self.role {
            Role::Hc | Role::Hcnw | Role::M2Segment { .. } => {
                negate_row(&mut g, 0);
            }
            Role::Hj { h, lambda } => {
                negate_row(&mut g, 0);
                for i in lambda + 1..g.nrows() {
                    g[(i, i)] -= 2.0 / h;
                }
            }
            Role::Hu | Role::Huw | Role::Hue | Role::Hcse | Role::Hcne | Role::Hcsw => {}
        }
        g
    }

    /// Hamiltonian form `Ĥ = -G`, the operator evolved as `exp(-τ·Ĥ)`.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        -self.generator()
    }

    /// Nonzero entries as `(row, col, value)` triplets, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.entries.nrows() {
            for j in 0..self.entries.ncols() {
                let v = self.entries[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Row-major CSV of the displayed entries, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.entries.nrows() {
            let row: Vec<String> = (0..self.entries.ncols())
                .map(|j| format!("{:.17e}", self.entries[(i, j)]))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

fn negate_row(m: &mut DMatrix<f64>, row: usize) {
    for j in 0..m.ncols() {
        m[(row, j)] = -m[(row, j)];
    }
}

/// Interior stencil weights at grid index `i`:
///
/// `α_i = -r z_i/(2Δ_z) + σ² z_i²/(2Δ_z²)`,
/// `β_i = -r - σ² z_i²/Δ_z²`,
/// `γ_i = r z_i/(2Δ_z) + σ² z_i²/(2Δ_z²)`.
pub fn stencil(i: usize, grid: &SpatialGrid, params: &MarketParams) -> Result<StencilCoefficients> {
    let n = grid.len();
    if i == 0 || i >= n - 1 {
        return Err(Error::BoundaryIndex {
            index: i,
            max: n - 2,
        });
    }
    let z = grid.z(i);
    let dz = grid.dz();
    let r = params.rate;
    let s2 = params.sigma * params.sigma;
    let advect = r * z / (2.0 * dz);
    let diffuse = s2 * z * z / (2.0 * dz * dz);
    Ok(StencilCoefficients {
        alpha: -advect + diffuse,
        beta: -r - 2.0 * diffuse,
        gamma: advect + diffuse,
    })
}

/// Jump-row weights at grid index `i` for window `h`.
pub fn jump_weights(
    i: usize,
    grid: &SpatialGrid,
    params: &MarketParams,
    h: f64,
    convention: JumpWeightConvention,
) -> Result<JumpRowWeights> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveWindow(h));
    }
    let z = grid.z(i);
    let dz = grid.dz();
    let r = params.rate;
    let s2 = params.sigma * params.sigma;
    let spread = match convention {
        JumpWeightConvention::AsPrinted => s2 / dz,
        JumpWeightConvention::SquaredSpacing => s2 / (dz * dz),
    };
    Ok(JumpRowWeights {
        a: z / (2.0 * dz) * (r - spread),
        b: z * (1.0 / h + r + s2 / (dz * dz)),
        c: -z / (2.0 * dz) * (r + spread),
    })
}

/// Continuous-evolution operator `H_C`.
///
/// First row `(r, 0, …, 0)`; interior rows carry the tridiagonal stencil;
/// the last row repeats the `n-2` stencil scaled by `z_{n-1}/z_{n-2}`
/// in the trailing three columns (backward-difference upper boundary).
pub fn build_hc(grid: &SpatialGrid, params: &MarketParams) -> Result<OperatorMatrix> {
    let n = grid.len();
    if n < 4 {
        return Err(Error::GridTooSmall(n));
    }
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = params.rate;
    for i in 1..n - 1 {
        let s = stencil(i, grid, params)?;
        m[(i, i - 1)] = s.alpha;
        m[(i, i)] = s.beta;
        m[(i, i + 1)] = s.gamma;
    }
    let ratio = grid.z(n - 1) / grid.z(n - 2);
    let s = stencil(n - 2, grid, params)?;
    m[(n - 1, n - 3)] = ratio * s.alpha;
    m[(n - 1, n - 2)] = ratio * s.beta;
    m[(n - 1, n - 1)] = ratio * s.gamma;
    Ok(OperatorMatrix {
        role: Role::Hc,
        entries: m,
    })
}

/// Jump operator `H_J(h)` with the default weight convention.
pub fn build_hj(grid: &SpatialGrid, params: &MarketParams, h: f64) -> Result<OperatorMatrix> {
    build_hj_with(grid, params, h, JumpWeightConvention::default())
}

/// Jump operator `H_J(h)`.
///
/// Rows `0..=λ` coincide with `H_C`. Each row `i > λ` reads the stencil
/// neighborhood of the pinned column: `a_i`, `b_i`, `c_i` in columns
/// `λ-1`, `λ`, `λ+1`, plus the displayed `+1/h` on the diagonal (which
/// lands on top of `c_{λ+1}` in the first jump row).
pub fn build_hj_with(
    grid: &SpatialGrid,
    params: &MarketParams,
    h: f64,
    convention: JumpWeightConvention,
) -> Result<OperatorMatrix> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveWindow(h));
    }
    let n = grid.len();
    let lambda = grid.lambda();
    let mut m = build_hc(grid, params)?.entries;
    for i in lambda + 1..n {
        for j in 0..n {
            m[(i, j)] = 0.0;
        }
        let w = jump_weights(i, grid, params, h, convention)?;
        m[(i, lambda - 1)] = w.a;
        m[(i, lambda)] = w.b;
        m[(i, lambda + 1)] = w.c;
        m[(i, i)] += 1.0 / h;
    }
    Ok(OperatorMatrix {
        role: Role::Hj { h, lambda },
        entries: m,
    })
}

/// The seven blocks used by the stacked method-2 assemblies.
#[derive(Debug, Clone)]
pub struct Method2Blocks {
    pub hu: OperatorMatrix,
    pub huw: OperatorMatrix,
    pub hue: OperatorMatrix,
    pub hcnw: OperatorMatrix,
    pub hcse: OperatorMatrix,
    pub hcne: OperatorMatrix,
    pub hcsw: OperatorMatrix,
}

/// Build `H_U = H_UW + H_UE` and the four-way split of `H_C`.
///
/// `H_UW` holds `z_i·α_λ`, `z_i·β_λ` in columns `λ-1`, `λ`; `H_UE` holds
/// `z_i·γ_λ` in column `λ+1`. `H_CNW` is the first `λ+1` rows of `H_C`
/// with entry `(λ, λ+1)` cleared, `H_CSE` the last `n-λ-1` rows with
/// `(λ+1, λ)` cleared, and `H_CSW`/`H_CNE` restore those two couplings, so
/// the four blocks sum back to `H_C`.
pub fn build_method2_blocks(grid: &SpatialGrid, params: &MarketParams) -> Result<Method2Blocks> {
    let n = grid.len();
    let lambda = grid.lambda();
    let hc = build_hc(grid, params)?;
    let pinned = stencil(lambda, grid, params)?;

    let mut huw = DMatrix::zeros(n, n);
    let mut hue = DMatrix::zeros(n, n);
    for i in 0..n {
        let z = grid.z(i);
        huw[(i, lambda - 1)] = z * pinned.alpha;
        huw[(i, lambda)] = z * pinned.beta;
        hue[(i, lambda + 1)] = z * pinned.gamma;
    }
    let hu = &huw + &hue;

    let mut hcnw = DMatrix::zeros(n, n);
    for i in 0..=lambda {
        for j in 0..n {
            hcnw[(i, j)] = hc.entries[(i, j)];
        }
    }
    hcnw[(lambda, lambda + 1)] = 0.0;

    let mut hcse = DMatrix::zeros(n, n);
    for i in lambda + 1..n {
        for j in 0..n {
            hcse[(i, j)] = hc.entries[(i, j)];
        }
    }
    hcse[(lambda + 1, lambda)] = 0.0;

    let mut hcsw = DMatrix::zeros(n, n);
    hcsw[(lambda + 1, lambda)] = hc.entries[(lambda + 1, lambda)];

    let mut hcne = DMatrix::zeros(n, n);
    hcne[(lambda, lambda + 1)] = hc.entries[(lambda, lambda + 1)];

    let tag = |role, entries| OperatorMatrix { role, entries };
    Ok(Method2Blocks {
        hu: tag(Role::Hu, hu),
        huw: tag(Role::Huw, huw),
        hue: tag(Role::Hue, hue),
        hcnw: tag(Role::Hcnw, hcnw),
        hcse: tag(Role::Hcse, hcse),
        hcne: tag(Role::Hcne, hcne),
        hcsw: tag(Role::Hcsw, hcsw),
    })
}

/// Piecewise method-1 operator: `H_J` on `(τ̃_j - h, τ̃_j]` for interior
/// epochs, `H_C` elsewhere.
pub fn assemble_m1(
    tau: f64,
    h: f64,
    grid: &SpatialGrid,
    params: &MarketParams,
    schedule: &MonitoringSchedule,
) -> Result<OperatorMatrix> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveWindow(h));
    }
    if !(0.0..=schedule.horizon()).contains(&tau) {
        return Err(Error::TimeOutOfRange {
            tau,
            horizon: schedule.horizon(),
        });
    }
    let in_window = schedule
        .interior()
        .iter()
        .any(|&t| tau > t - h && tau <= t);
    if in_window {
        build_hj(grid, params, h)
    } else {
        build_hc(grid, params)
    }
}

/// Number of `n`-sized blocks in the stacked method-2 state
/// (`N` rounded up to a power of two).
pub fn m2_block_count(schedule: &MonitoringSchedule) -> usize {
    schedule.num_intervals().next_power_of_two()
}

/// Dimension of the stacked method-2 state vector.
pub fn m2_dim(grid: &SpatialGrid, schedule: &MonitoringSchedule) -> usize {
    grid.len() * m2_block_count(schedule)
}

/// Stacked method-2 operator for the segment containing `tau`.
///
/// Segment 0 fills the first block column with `[H_C; H_U; …; H_U]`.
/// Segment `j ≥ 1` places `H_CNW`/`H_CNE`/`H_CSW`/`H_CSE` at block
/// positions `(0,0)`, `(0,j)`, `(j,0)`, `(j,j)` and `H_UW`/`H_UE` in
/// block rows `j+1..N` (columns 0 and `j`). Blocks at or beyond `N` are
/// zero padding.
pub fn assemble_m2(
    tau: f64,
    grid: &SpatialGrid,
    params: &MarketParams,
    schedule: &MonitoringSchedule,
) -> Result<OperatorMatrix> {
    let segment = schedule.segment_of(tau)?;
    assemble_m2_segment(segment, grid, params, schedule)
}

/// Stacked method-2 operator for segment index `j ∈ 0..N`.
pub fn assemble_m2_segment(
    segment: usize,
    grid: &SpatialGrid,
    params: &MarketParams,
    schedule: &MonitoringSchedule,
) -> Result<OperatorMatrix> {
    let n_intervals = schedule.num_intervals();
    if segment >= n_intervals {
        return Err(Error::InvalidRunSpec(format!(
            "segment {segment} out of range for {n_intervals} intervals"
        )));
    }
    let n = grid.len();
    let blocks = m2_block_count(schedule);
    let dim = n * blocks;
    let mut m = DMatrix::zeros(dim, dim);
    let mut place = |bi: usize, bj: usize, block: &DMatrix<f64>| {
        for i in 0..n {
            for j in 0..n {
                let v = block[(i, j)];
                if v != 0.0 {
                    m[(bi * n + i, bj * n + j)] = v;
                }
            }
        }
    };

    if segment == 0 {
        let hc = build_hc(grid, params)?;
        let b = build_method2_blocks(grid, params)?;
        place(0, 0, hc.entries());
        for k in 1..n_intervals {
            place(k, 0, b.hu.entries());
        }
    } else {
        let b = build_method2_blocks(grid, params)?;
        place(0, 0, b.hcnw.entries());
        place(0, segment, b.hcne.entries());
        place(segment, 0, b.hcsw.entries());
        place(segment, segment, b.hcse.entries());
        for k in segment + 1..n_intervals {
            place(k, 0, b.huw.entries());
            place(k, segment, b.hue.entries());
        }
    }
    Ok(OperatorMatrix {
        role: Role::M2Segment { segment },
        entries: m,
    })
}
