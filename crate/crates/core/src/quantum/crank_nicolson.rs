//! Crank–Nicolson propagation with Dirichlet walls.
//!
//! (1 + iΔt·H/2ℏ) ψⁿ⁺¹ = (1 − iΔt·H/2ℏ) ψⁿ on the interior points, with
//! H = −(ℏ²/2m)·D₂ + V and ψ = 0 at both ends. The tridiagonal left-hand side
//! is factored once and reused for every step.

use num_complex::Complex64;

use super::grid::{Grid1D, Potential, QuantumParticle, Wavefunction};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Reject `dt > cfl_safety · dx²·m/ℏ`. Crank–Nicolson is stable for any
    /// step; this only guards accuracy.
    pub cfl_safety: f64,
    /// Maximum relative norm drift over the whole run.
    pub max_norm_drift: f64,
    /// Abort once |ψ|² next to a wall exceeds this (relative to the norm).
    pub boundary_density_limit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { cfl_safety: 10.0, max_norm_drift: 1e-8, boundary_density_limit: 1e-8 }
    }
}

/// Factored Crank–Nicolson propagator for a fixed grid, potential and step.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    grid: Grid1D,
    dt: f64,
    /// Off-diagonal of the right-hand operator (1 − iΔtH/2ℏ).
    rhs_off: Complex64,
    rhs_diag: Vec<Complex64>,
    /// Off-diagonal of the left-hand operator.
    lhs_off: Complex64,
    /// Thomas factorization: modified super-diagonal and pivots.
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(
        grid: Grid1D,
        potential: &Potential,
        particle: &QuantumParticle,
        dt: f64,
        options: &EvolveOptions,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if potential.values().len() != grid.len() {
            return Err(invalid("potential length differs from grid"));
        }
        let dx = grid.dx();
        let dt_limit = options.cfl_safety * dx * dx * particle.mass / particle.hbar;
        if dt > dt_limit {
            return Err(invalid(format!(
                "dt = {dt} exceeds cfl_safety·dx²·m/ℏ = {dt_limit}"
            )));
        }

        let n = grid.len();
        let kinetic = particle.hbar * particle.hbar / (particle.mass * dx * dx);
        let h_off = -0.5 * kinetic;
        let r = Complex64::new(0.0, dt / (2.0 * particle.hbar));
        let one = Complex64::new(1.0, 0.0);

        let lhs_off = r * h_off;
        let rhs_off = -lhs_off;
        let lhs_diag: Vec<Complex64> =
            potential.values().iter().map(|&v| one + r * (kinetic + v)).collect();
        let rhs_diag: Vec<Complex64> =
            potential.values().iter().map(|&v| one - r * (kinetic + v)).collect();

        // Interior unknowns are 1..n-1; entries 0 and n-1 stay unused.
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        for i in 1..n - 1 {
            let pivot = if i == 1 { lhs_diag[i] } else { lhs_diag[i] - lhs_off * c_prime[i - 1] };
            inv_pivot[i] = pivot.inv();
            c_prime[i] = lhs_off * inv_pivot[i];
        }

        Ok(CrankNicolson {
            grid,
            dt,
            rhs_off,
            rhs_diag,
            lhs_off,
            c_prime,
            inv_pivot,
            scratch: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Advance `psi` in place by one step.
    pub fn step(&mut self, psi: &mut [Complex64]) {
        let n = psi.len();
        debug_assert_eq!(n, self.grid.len());
        let d = &mut self.scratch;
        // Forward sweep on rhs = B·ψ.
        for i in 1..n - 1 {
            let rhs = self.rhs_diag[i] * psi[i] + self.rhs_off * (psi[i - 1] + psi[i + 1]);
            let prev = if i == 1 { Complex64::new(0.0, 0.0) } else { d[i - 1] };
            d[i] = (rhs - self.lhs_off * prev) * self.inv_pivot[i];
        }
        psi[n - 2] = d[n - 2];
        for i in (1..n - 2).rev() {
            psi[i] = d[i] - self.c_prime[i] * psi[i + 1];
        }
        psi[0] = Complex64::new(0.0, 0.0);
        psi[n - 1] = Complex64::new(0.0, 0.0);
    }
}

struct Monitor {
    norm0: f64,
    dx: f64,
    options: EvolveOptions,
}

impl Monitor {
    fn new(wf: &Wavefunction, options: EvolveOptions) -> Result<Self> {
        let norm0 = wf.norm();
        if !(norm0 > 0.0 && norm0.is_finite()) {
            return Err(invalid(format!("cannot evolve wavefunction with norm {norm0}")));
        }
        Ok(Monitor { norm0, dx: wf.grid.dx(), options })
    }

    fn check(&self, psi: &[Complex64], step: usize) -> Result<()> {
        let n = psi.len();
        let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx;
        let drift = ((norm - self.norm0) / self.norm0).abs();
        if !(drift <= self.options.max_norm_drift) {
            return Err(Error::NumericalInstability {
                step,
                drift,
                tolerance: self.options.max_norm_drift,
            });
        }
        let edge = psi[1].norm_sqr().max(psi[n - 2].norm_sqr()) / self.norm0;
        if edge > self.options.boundary_density_limit {
            return Err(Error::BoundaryDensity {
                step,
                density: edge,
                limit: self.options.boundary_density_limit,
            });
        }
        Ok(())
    }
}

/// ψ at `wf.time + n_steps·dt`.
pub fn evolve(
    wf: &Wavefunction,
    potential: &Potential,
    particle: &QuantumParticle,
    dt: f64,
    n_steps: usize,
    options: &EvolveOptions,
) -> Result<Wavefunction> {
    let mut snapshots = evolve_history(wf, potential, particle, dt, n_steps, n_steps.max(1), options)?;
    Ok(snapshots.pop().expect("history always holds the initial state"))
}

/// Snapshots every `stride` steps, starting with the initial state. The final
/// state is always included, even if `n_steps` is not a multiple of `stride`.
pub fn evolve_history(
    wf: &Wavefunction,
    potential: &Potential,
    particle: &QuantumParticle,
    dt: f64,
    n_steps: usize,
    stride: usize,
    options: &EvolveOptions,
) -> Result<Vec<Wavefunction>> {
    if stride == 0 {
        return Err(invalid("snapshot stride must be at least 1"));
    }
    let mut solver = CrankNicolson::new(wf.grid, potential, particle, dt, options)?;
    let monitor = Monitor::new(wf, *options)?;
    let mut psi = wf.amplitudes.clone();
    psi[0] = Complex64::new(0.0, 0.0);
    let last = psi.len() - 1;
    psi[last] = Complex64::new(0.0, 0.0);

    let mut out = vec![wf.clone()];
    for step in 1..=n_steps {
        solver.step(&mut psi);
        monitor.check(&psi, step)?;
        if step % stride == 0 || step == n_steps {
            out.push(Wavefunction {
                grid: wf.grid,
                amplitudes: psi.clone(),
                time: wf.time + step as f64 * dt,
            });
        }
    }
    Ok(out)
}
