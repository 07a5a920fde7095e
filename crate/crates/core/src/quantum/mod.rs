//! One-dimensional Schrödinger dynamics on a uniform grid.

mod analysis;
mod crank_nicolson;
mod grid;
mod io;

pub use analysis::{
    continuity_residual, mean_position, polar_decompose, probability_current,
    probability_density, rms_width, PolarForm, DEFAULT_RHO_FLOOR_REL,
};
pub use crank_nicolson::{evolve, evolve_history, CrankNicolson, EvolveOptions};
pub use grid::{init_gaussian_packet, Grid1D, Potential, QuantumParticle, Wavefunction};
pub use io::write_csv;

/// Free Gaussian RMS width σ(t) = σ₀·√(1 + (ℏt / 2mσ₀²)²), with `hbar_over_mass`
/// in length²/time.
pub fn free_gaussian_width(sigma0: f64, hbar_over_mass: f64, t: f64) -> f64 {
    let s = hbar_over_mass * t / (2.0 * sigma0 * sigma0);
    sigma0 * (1.0 + s * s).sqrt()
}
