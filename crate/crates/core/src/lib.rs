//! Core of a deterministic two-bank, two-group credit market simulator.
//!
//! A mainstream bank `L` (baseline rate) and a subprime bank `H` (rate
//! `1 + nu`) approve or reject loan applications from two groups under
//! per-period tail-risk constraints (Value-at-Risk or Expected Shortfall).
//! Banks hold Inverse-Gamma beliefs over each group's payoff variance and
//! learn only from repayments on loans they actually made. The crate covers
//! the per-period stage game, the closed-form variance thresholds and
//! minimal-subsidy solvers, multi-period trajectories (absorbing exclusion,
//! subsidised escape, alternative guarantees), and seeded Monte Carlo
//! replication.
//!
//! The crate is `no_std` (with `alloc`); float kernels come from `libm` so
//! draw sequences and trajectories are bit-identical across platforms. IO,
//! the CLI, and file formats live in the companion `subprime-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod beliefs;
pub mod engine;
pub mod error;
pub mod market;
pub mod risk;
pub mod stats;

pub use error::{AssumptionViolation, Error, Result};
