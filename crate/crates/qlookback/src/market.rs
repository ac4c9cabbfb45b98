//! Market data, monitoring schedule, spatial grid and payoff/boundary
//! functions for the reduced lookback pricing problem.
//!
//! All quantities on the solver side are expressed in the reduced variable
//! `z = x / y` (spot over running maximum) and time to maturity
//! `ξ = T - η`; option values are dimensionless until [`inflate`] maps
//! them back to currency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper edge of the reduced spatial domain.
pub const DEFAULT_Z_MAX: f64 = 2.5;

/// Tolerance for pinning the grid index with `z = 1`.
const PIN_TOL: f64 = 1e-12;

/// Black–Scholes market parameters.
///
/// The maturity is kept as a whole number of years; the monitoring
/// schedule defaults to annual revaluation epochs `0, 1, …, T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Risk-free rate (1/year).
    pub rate: f64,
    /// Volatility (1/√year).
    pub sigma: f64,
    /// Initial asset price (currency units).
    pub spot: f64,
    /// Maturity in whole years.
    pub maturity_years: u32,
}

impl MarketParams {
    pub fn new(rate: f64, sigma: f64, spot: f64, maturity_years: u32) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParams(format!("rate must be >= 0, got {rate}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma must be > 0, got {sigma}")));
        }
        if !(spot > 0.0) || !spot.is_finite() {
            return Err(Error::InvalidParams(format!("spot must be > 0, got {spot}")));
        }
        if maturity_years < 1 {
            return Err(Error::InvalidParams("maturity must be >= 1 year".into()));
        }
        Ok(Self {
            rate,
            sigma,
            spot,
            maturity_years,
        })
    }

    /// Maturity `T` as a float, in years.
    pub fn maturity(&self) -> f64 {
        f64::from(self.maturity_years)
    }
}

/// Uniform monitoring schedule `0 = τ̃_0 < τ̃_1 < … < τ̃_N = T`.
///
/// Only uniform partitions are representable; the interior epochs
/// `τ̃_1, …, τ̃_{N-1}` are the times at which the running maximum resets
/// and the pricing function jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringSchedule {
    intervals: usize,
    horizon: f64,
    epochs: Vec<f64>,
}

impl MonitoringSchedule {
    /// Uniform partition of `[0, horizon]` into `intervals >= 2` pieces.
    pub fn uniform(intervals: usize, horizon: f64) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidSchedule(format!(
                "need at least 2 monitoring intervals, got {intervals}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let epochs = (0..=intervals)
            .map(|j| j as f64 * horizon / intervals as f64)
            .collect();
        Ok(Self {
            intervals,
            horizon,
            epochs,
        })
    }

    /// Annual revaluation: epochs at integer years `0, 1, …, T`.
    pub fn annual(params: &MarketParams) -> Result<Self> {
        Self::uniform(params.maturity_years as usize, params.maturity())
    }

    pub fn num_intervals(&self) -> usize {
        self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// All epochs including both endpoints.
    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    /// Interior epochs `τ̃_1, …, τ̃_{N-1}` (the jump times).
    pub fn interior(&self) -> &[f64] {
        &self.epochs[1..self.intervals]
    }

    /// Index `j` of the segment `[τ̃_j, τ̃_{j+1})` containing `tau`;
    /// `tau = T` belongs to the final segment.
    pub fn segment_of(&self, tau: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&tau) {
            return Err(Error::TimeOutOfRange {
                tau,
                horizon: self.horizon,
            });
        }
        let dt = self.horizon / self.intervals as f64;
        let j = (tau / dt).floor() as usize;
        Ok(j.min(self.intervals - 1))
    }
}

/// Uniform grid on `[0, z_max]` with a pinned index `λ` where `z_λ = 1`.
///
/// The jump condition pivots on the column `λ`, so construction fails
/// unless some grid point hits `z = 1` to within `1e-12`. With
/// `z_max = 2.5`, power-of-two sizes satisfying the pin are 16, 256, 4096,
/// …; classical-only refinements keep `z_max` and halve the spacing via
/// `n → 2n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n: usize,
    z_max: f64,
    dz: f64,
    lambda: usize,
    points: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(n: usize, z_max: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::GridTooSmall(n));
        }
        if !(z_max > 1.0) || !z_max.is_finite() {
            return Err(Error::GridPin { n, z_max });
        }
        let points: Vec<f64> = (0..n)
            .map(|i| i as f64 * z_max / (n - 1) as f64)
            .collect();
        let dz = z_max / (n - 1) as f64;
        let lambda = points
            .iter()
            .position(|&z| (z - 1.0).abs() < PIN_TOL)
            .ok_or(Error::GridPin { n, z_max })?;
        Ok(Self {
            n,
            z_max,
            dz,
            lambda,
            points,
        })
    }

    /// Grid with `2^qubits` points on `[0, DEFAULT_Z_MAX]`.
    pub fn with_qubits(qubits: u32) -> Result<Self> {
        Self::new(1usize << qubits, DEFAULT_Z_MAX)
    }

    /// Refined grid with the spacing halved and `z_max` unchanged.
    pub fn refined(&self) -> Result<Self> {
        Self::new(2 * self.n - 1, self.z_max)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Grid spacing `Δ_z`.
    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// Index `λ` with `z_λ = 1`.
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn z(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Qubit count when the grid size is a power of two.
    pub fn qubits(&self) -> Option<u32> {
        self.n.is_power_of_two().then(|| self.n.trailing_zeros())
    }
}

/// Terminal condition `u(0, z) = (1 - z)^+` sampled on the grid.
pub fn payoff(grid: &SpatialGrid) -> Vec<f64> {
    grid.points().iter().map(|&z| (1.0 - z).max(0.0)).collect()
}

/// Lower boundary value `u(ξ, 0) = e^{-r ξ}`.
pub fn lower_boundary(tau: f64, params: &MarketParams) -> f64 {
    (-params.rate * tau).exp()
}

/// Map raw coordinates `(η, x, y)` to reduced coordinates `(ξ, z)`.
pub fn reduce(eta: f64, x: f64, y: f64, params: &MarketParams) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(Error::InvalidParams(format!(
            "running maximum must be positive, got {y}"
        )));
    }
    Ok((params.maturity() - eta, x / y))
}

/// Map a reduced value back to currency: `v = y · u`.
pub fn inflate(u: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParams(format!(
            "running maximum must be positive, got {y}"
        )));
    }
    Ok(y * u)
}
