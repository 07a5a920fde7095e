use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform grid `x_i = x_min + i·dx`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(invalid(format!("grid needs x_max > x_min, got [{x_min}, {x_max}]")));
        }
        if n_points < 3 {
            return Err(invalid(format!("grid needs at least 3 points, got {n_points}")));
        }
        Ok(Grid1D { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.n_points).map(move |i| self.x_min + i as f64 * dx)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Cell index `i` with `x_i <= x <= x_{i+1}` and the fractional offset in
    /// that cell.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideGrid { x, x_min: self.x_min, x_max: self.x_max });
        }
        let u = (x - self.x_min) / self.dx();
        let i = (u.floor() as usize).min(self.n_points - 2);
        Ok((i, u - i as f64))
    }
}

/// Mass and ℏ for the particle being evolved. Only the ratio ℏ/m enters the
/// free dynamics, but the current and phase need them separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumParticle {
    pub mass: f64,
    pub hbar: f64,
}

impl QuantumParticle {
    pub fn new(mass: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid(format!("mass must be positive, got {mass}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(QuantumParticle { mass, hbar })
    }

    /// ℏ = m = 1.
    pub const fn natural() -> Self {
        QuantumParticle { mass: 1.0, hbar: 1.0 }
    }

    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }
}

/// V(x) sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential values must be finite"));
        }
        Ok(Potential { values })
    }

    pub fn zero(grid: &Grid1D) -> Self {
        Potential { values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.points().map(f).collect())
    }

    /// ½·k·(x − x_c)².
    pub fn harmonic(grid: &Grid1D, spring: f64, center: f64) -> Result<Self> {
        Self::from_fn(grid, |x| 0.5 * spring * (x - center).powi(2))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid1D,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl Wavefunction {
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(invalid(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Wavefunction { grid, amplitudes, time })
    }

    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitudes = grid.points().map(f).collect();
        Wavefunction { grid, amplitudes, time }
    }

    /// Samples of e^{i(kx − ωt)} with ω = ℏk²/2m. Not normalizable on the
    /// grid; used as an analytic free-particle history.
    pub fn plane_wave(grid: Grid1D, k: f64, particle: &QuantumParticle, time: f64) -> Self {
        let omega = particle.hbar * k * k / (2.0 * particle.mass);
        Self::from_fn(grid, time, |x| Complex64::from_polar(1.0, k * x - omega * time))
    }

    /// ∑|ψ_i|² dx.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid(format!("cannot normalize wavefunction with norm {norm}")));
        }
        let scale = 1.0 / norm.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }
}

/// Normalized ψ(x) ∝ exp(−(x−x_c)²/4σ₀²)·exp(i k₀ x), so that σ₀ is the RMS
/// width of |ψ|².
pub fn init_gaussian_packet(grid: Grid1D, center: f64, sigma0: f64, k0: f64) -> Result<Wavefunction> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(invalid(format!("sigma0 must be positive, got {sigma0}")));
    }
    let margin = 6.0 * sigma0;
    if center - grid.x_min() <= margin || grid.x_max() - center <= margin {
        return Err(Error::PacketTouchesBoundary(format!(
            "center {center} with sigma0 {sigma0} needs 6·sigma0 = {margin} clearance inside [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let four_var = 4.0 * sigma0 * sigma0;
    Wavefunction::from_fn(grid, 0.0, |x| {
        let envelope = (-(x - center).powi(2) / four_var).exp();
        Complex64::from_polar(envelope, k0 * x)
    })
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 801).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        let (i, f) = g.locate(0.25).unwrap();
        assert_eq!(i, 2);
        assert!((f - 0.5).abs() < 1e-12);
        assert_eq!(g.locate(1.0).unwrap().0, 9);
        assert!(g.locate(1.5).is_err());
    }

    #[test]
    fn gaussian_is_real_symmetric_normalized() {
        let wf = init_gaussian_packet(grid(), 0.0, 1.0, 0.0).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-12);
        let n = wf.amplitudes.len();
        for i in 0..n {
            let c = wf.amplitudes[i];
            assert_eq!(c.im, 0.0);
            assert!(c.re > 0.0);
            assert!((c.re - wf.amplitudes[n - 1 - i].re).abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_kick_leaves_density_alone() {
        let a = init_gaussian_packet(grid(), 0.0, 1.0, 0.0).unwrap();
        let b = init_gaussian_packet(grid(), 0.0, 1.0, 5.0).unwrap();
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(matches!(
            init_gaussian_packet(grid(), 0.0, 0.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            init_gaussian_packet(grid(), 15.0, 1.0, 0.0),
            Err(Error::PacketTouchesBoundary(_))
        ));
    }

    #[test]
    fn zero_wavefunction_cannot_normalize() {
        let g = grid();
        let mut wf = Wavefunction::from_fn(g, 0.0, |_| Complex64::new(0.0, 0.0));
        assert!(wf.normalize().is_err());
    }
}
