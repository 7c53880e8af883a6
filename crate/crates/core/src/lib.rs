//! LQG controller synthesis by policy gradient over input-output-history gains.
//!
//! A dynamic output-feedback controller of order `L n_u` is parameterized by
//! a static gain `K` acting on the last `L` inputs and outputs. The cost of
//! `K` and its gradient come from two discrete Lyapunov equations on the
//! lifted history dynamics, and a plain gradient loop on a slightly
//! regularized cost recovers the Riccati-optimal controller.
//!
//! Modules, bottom up:
//!
//! - [`linalg`]: dense kernels (Lyapunov, Riccati, Gramians, balanced truncation).
//! - [`plant`]: plant, noise, weights, dynamic controllers and the LQG baseline.
//! - [`ioh`]: history lift of the plant and controller lift/realization.
//! - [`engine`]: analytic cost, gradient and certificates.
//! - [`pgm`]: the policy-gradient loop and multi-seed studies.
//! - [`simulate`]: Monte-Carlo estimates used as an independent oracle.
//! - [`commands`]: the CLI subcommands as library functions.

// `!(x <= limit)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod commands;
pub mod engine;
pub mod error;
pub mod ioh;
pub mod linalg;
pub mod pgm;
pub mod plant;
pub mod simulate;

pub use engine::{cost_of_dyn_controller, CostReport, RelaxedProblem};
pub use error::{Error, Result};
pub use ioh::{build_history_system, lift_controller, realize_controller, HistorySystem, IohGain};
pub use pgm::{multi_seed_study, random_stabilizing_gain, PgmConfig, PgmTrace};
pub use plant::{lqg_baseline, CostWeights, DynController, NoiseSpec, Plant, Problem};
