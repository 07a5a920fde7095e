//! Bohmian velocity fields and deterministic trajectories.
//!
//! The velocity is v = (1/m)·∂S/∂x, evaluated at grid nodes from the local
//! phase difference across neighbouring points and interpolated linearly in
//! x and t. The local form needs no global phase unwrap and is exact for
//! sampled plane waves.

mod ensemble;
mod field;
mod trajectory;

pub use ensemble::{
    equivariance_check, propagate_final_positions, sample_equilibrium_ensemble, EnsembleSpec,
    EquivarianceReport, Sampling, MAX_FAILURE_FRACTION,
};
pub use field::{plane_wave_velocity, velocity_at, VelocityField};
pub use trajectory::{
    first_crossing, propagate_trajectory, write_trajectories_csv, Trajectory, TrajectoryFailure,
    WavefunctionHistory, DEFAULT_SUBSTEPS,
};
