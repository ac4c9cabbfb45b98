//! Pricing engine for discretely monitored lookback options in the
//! Black–Scholes model, built around imaginary-time evolution of the
//! pricing PDE.
//!
//! The option pays `(Y_T - S_T)^+` at maturity, where `Y_T` is the maximum
//! of the asset over a fixed monitoring schedule. After the reduction
//! `v(η, x, y) = y · u(ξ, z)` with `z = x / y` and `ξ = T - η`, the reduced
//! value `u` solves a one-dimensional PDE whose running-maximum resets
//! appear as jump conditions `u(ξ⁺, z) = z · u(ξ⁻, 1)` at interior
//! monitoring epochs.
//!
//! Two formulations of the jump handling are implemented:
//!
//! * **Method 1** alternates a continuous-evolution operator `H_C` with a
//!   dedicated jump operator `H_J(h)` applied over a short window `h`
//!   before each monitoring epoch ([`operators::assemble_m1`]).
//! * **Method 2** stacks auxiliary functions that pre-evolve the jump
//!   values, so every segment is governed by a single continuous block
//!   operator at the cost of `⌈log₂ N⌉` extra qubits
//!   ([`operators::assemble_m2`]).
//!
//! Either formulation can be driven by two engines: exact evolution via
//! the matrix exponential ([`oracles::expm_evolve`]) or a McLachlan-type
//! variational evolution of a layered `Ry`/`CRy` ansatz ([`varqite`]).
//! Three independent classical routes — a method-of-lines finite-difference
//! solver with explicit jump application, the matrix exponential, and a
//! Monte Carlo pricer ([`oracles`]) — cross-check every quantum-side
//! result.
//!
//! The module layout mirrors the pipeline:
//!
//! * [`market`] — market parameters, monitoring schedule, spatial grid,
//!   payoff and boundary data.
//! * [`operators`] — the finite-difference generator matrices and their
//!   time-dependent assemblies.
//! * [`pauli`] — tensorized Pauli-string decomposition of the operators.
//! * [`qsim`] — dense statevector simulator, layered ansatz, amplitude
//!   encoding and exact circuit derivatives.
//! * [`varqite`] — the McLachlan linear system `A θ̇ = -C` and the
//!   parameter stepper.
//! * [`oracles`] — finite-difference, matrix-exponential and Monte Carlo
//!   ground truths.
//! * [`pipeline`] — end-to-end pricing runs and price extraction.
//! * [`cli`] — configuration files, subcommands and artifact output.
//!
//! See the crate `examples/` directory for one runnable example per
//! capability; CLI usage is described in the README.

pub mod cli;
pub mod error;
pub mod market;
pub mod operators;
pub mod optim;
pub mod oracles;
pub mod pauli;
pub mod pipeline;
pub mod qsim;
pub mod varqite;

pub use error::{Error, Result};
