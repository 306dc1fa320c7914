//! Cubic observers for Lipschitz and one-sided Lipschitz systems with input
//! and output delays.
//!
//! - [`numlin`]: small dense matrix helpers (rank, pseudoinverse, eigenvalues).
//! - [`exprlang`]: the nonlinearity expression language used in configs.
//! - [`model`]: plant/observer/certificate types and JSON configuration.
//! - [`design_uio`]: unknown-input decoupling and structural design of `E`, `G`, `J`.
//! - [`cert`]: Lyapunov certificate verification and search, cubic gain.
//! - [`sim`]: fixed-step RK4 simulation and the cubic/linear comparison.
//! - [`cli`]: the `cubobs` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cert;
pub mod cli;
pub mod design_uio;
pub mod exprlang;
pub mod model;
pub mod numlin;
pub mod sim;
