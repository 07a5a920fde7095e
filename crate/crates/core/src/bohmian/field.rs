use crate::error::{invalid, Error, Result};
use crate::quantum::{Grid1D, QuantumParticle, Wavefunction};

/// ℏk/m.
pub fn plane_wave_velocity(k: f64, particle: &QuantumParticle) -> Result<f64> {
    if !(particle.mass > 0.0) {
        return Err(invalid(format!("mass must be positive, got {}", particle.mass)));
    }
    Ok(particle.hbar * k / particle.mass)
}

/// Nodal velocities and densities of one snapshot.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Grid1D,
    time: f64,
    /// NaN where undefined (walls, nodes, neighbours of nodes).
    velocity: Vec<f64>,
    rho: Vec<f64>,
    floor: f64,
}

impl VelocityField {
    /// `rho_floor` is absolute; see [`crate::quantum::DEFAULT_RHO_FLOOR_REL`]
    /// for the usual relative choice.
    pub fn new(wf: &Wavefunction, particle: &QuantumParticle, rho_floor: f64) -> Self {
        let psi = &wf.amplitudes;
        let n = psi.len();
        let rho: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
        let scale = particle.hbar / (particle.mass * 2.0 * wf.grid.dx());
        let mut velocity = vec![f64::NAN; n];
        for i in 1..n - 1 {
            if rho[i - 1] > rho_floor && rho[i] > rho_floor && rho[i + 1] > rho_floor {
                velocity[i] = scale * (psi[i + 1] * psi[i - 1].conj()).arg();
            }
        }
        VelocityField { grid: wf.grid, time: wf.time, velocity, rho, floor: rho_floor }
    }

    /// Floor at `rel` times the snapshot's peak density.
    pub fn with_relative_floor(wf: &Wavefunction, particle: &QuantumParticle, rel: f64) -> Self {
        let peak = wf.amplitudes.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        Self::new(wf, particle, rel * peak)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn nodal(&self) -> &[f64] {
        &self.velocity
    }

    pub fn at(&self, x: f64) -> Result<f64> {
        let (i, f) = self.grid.locate(x)?;
        let rho = (1.0 - f) * self.rho[i] + f * self.rho[i + 1];
        let (va, vb) = (self.velocity[i], self.velocity[i + 1]);
        if rho <= self.floor || va.is_nan() || vb.is_nan() {
            return Err(Error::VelocityUndefined { x, density: rho, floor: self.floor });
        }
        Ok((1.0 - f) * va + f * vb)
    }
}

/// v(x) = (1/m)·∂S/∂x at one point of one snapshot.
pub fn velocity_at(wf: &Wavefunction, x: f64, particle: &QuantumParticle, rho_floor: f64) -> Result<f64> {
    VelocityField::new(wf, particle, rho_floor).at(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{init_gaussian_packet, probability_current, probability_density};
    use num_complex::Complex64;

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 801).unwrap()
    }

    #[test]
    fn plane_wave_velocity_values() {
        let p = QuantumParticle::natural();
        assert_eq!(plane_wave_velocity(2.0, &p).unwrap(), 2.0);
        assert_eq!(plane_wave_velocity(0.0, &p).unwrap(), 0.0);
        let heavy = QuantumParticle::new(1.5, 1.0).unwrap();
        assert!((plane_wave_velocity(-3.0, &heavy).unwrap() + 2.0).abs() < 1e-15);
        let bad = QuantumParticle { mass: 0.0, hbar: 1.0 };
        assert!(plane_wave_velocity(1.0, &bad).is_err());
    }

    #[test]
    fn plane_wave_field_is_exact() {
        let p = QuantumParticle::natural();
        let wf = Wavefunction::plane_wave(grid(), 3.0, &p, 0.0);
        for x in [-19.9, -3.3, 0.0, 0.01, 7.77, 19.9] {
            let v = velocity_at(&wf, x, &p, 1e-12).unwrap();
            assert!((v - 3.0).abs() < 1e-12, "v({x}) = {v}");
        }
    }

    #[test]
    fn real_gaussian_is_at_rest() {
        let p = QuantumParticle::natural();
        let wf = init_gaussian_packet(grid(), 0.0, 1.0, 0.0).unwrap();
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(velocity_at(&wf, x, &p, 1e-14).unwrap(), 0.0);
        }
    }

    #[test]
    fn free_gaussian_velocity_matches_closed_form() {
        // ψ(x,t) for a free Gaussian with ℏ = m = σ₀ = 1, written out
        // analytically; v(x,t) = x·t / (4 + t²).
        let t: f64 = 2.0;
        let wf = Wavefunction::from_fn(grid(), t, |x| {
            let a = Complex64::new(1.0, t / 2.0);
            (-(x * x) / (4.0 * a)).exp() / a.sqrt()
        });
        let p = QuantumParticle::natural();
        let v = velocity_at(&wf, 2.0, &p, 1e-14).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "v = {v}");

        // Current route agrees: j/ρ at the node x = 2.
        let j = probability_current(&wf, &p);
        let rho = probability_density(&wf);
        let i = 440;
        assert!((wf.grid.x(i) - 2.0).abs() < 1e-12);
        assert!((j[i] / rho[i] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn node_makes_velocity_undefined() {
        let wf = Wavefunction::from_fn(grid(), 0.0, |x| Complex64::new(x * (-x * x / 2.0).exp(), 0.0));
        let field = VelocityField::with_relative_floor(&wf, &QuantumParticle::natural(), 1e-12);
        assert!(matches!(field.at(0.0), Err(Error::VelocityUndefined { .. })));
        assert!(matches!(field.at(0.02), Err(Error::VelocityUndefined { .. })));
        assert!(field.at(1.0).is_ok());
        assert!(matches!(field.at(25.0), Err(Error::OutsideGrid { .. })));
    }
}
