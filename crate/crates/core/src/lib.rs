//! Numerical laboratory for trajectory-based reasoning about neutral-kaon
//! decays.
//!
//! The crate is layered bottom-up:
//!
//! * [`quantum`]: 1D wavefunctions on a grid, Crank–Nicolson evolution,
//!   density, current and polar decomposition.
//! * [`bohmian`]: velocity fields, deterministic trajectories, quantum
//!   equilibrium ensembles and the equivariance check.
//! * [`kaon`]: the K_L/K_S two-state system: overlap, exponential decay,
//!   strangeness content and decay sampling.
//! * [`event_lab`]: Monte Carlo kaon flights, two-body π⁺π⁻ kinematics and
//!   momentum smearing.
//! * [`reconstruction`]: straight-line track retrodiction, vertexing, proper
//!   time and K_S-like / K_L-like classification.
//! * [`spreading`]: wave-packet spreading error budget over flight distances.
//! * [`pipeline`]: config files, seeding, file formats and the four run
//!   commands.
//!
//! Batch work (ensembles, event generation, run analysis) goes through
//! [`exec::Execution`], which uses rayon when the `parallel` feature is on and
//! a plain loop otherwise. Results do not depend on the choice.

pub mod bohmian;
pub mod error;
pub mod event_lab;
pub mod exec;
pub mod kaon;
pub mod pipeline;
pub mod quantum;
pub mod reconstruction;
pub mod rng;
pub mod spreading;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
pub use units::PhysicalConstants;

/// Version string embedded in every report.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
