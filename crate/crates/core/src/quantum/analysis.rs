use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::{QuantumParticle, Wavefunction};
use crate::error::{invalid, Result};

/// Default phase/velocity floor, as a fraction of max ρ.
pub const DEFAULT_RHO_FLOOR_REL: f64 = 1e-12;

/// ρ_i = |ψ_i|².
pub fn probability_density(wf: &Wavefunction) -> Vec<f64> {
    wf.amplitudes.iter().map(|c| c.norm_sqr()).collect()
}

/// j = (ℏ/m)·Im(ψ* ∂ψ/∂x) with central differences; zero at the two end points.
pub fn probability_current(wf: &Wavefunction, particle: &QuantumParticle) -> Vec<f64> {
    let psi = &wf.amplitudes;
    let n = psi.len();
    let scale = particle.hbar / (particle.mass * 2.0 * wf.grid.dx());
    let mut j = vec![0.0; n];
    for i in 1..n - 1 {
        j[i] = scale * (psi[i].conj() * (psi[i + 1] - psi[i - 1])).im;
    }
    j
}

pub fn mean_position(wf: &Wavefunction) -> f64 {
    let rho = probability_density(wf);
    let total: f64 = rho.iter().sum();
    wf.grid.points().zip(&rho).map(|(x, r)| x * r).sum::<f64>() / total
}

/// RMS width √(⟨x²⟩ − ⟨x⟩²) of |ψ|².
pub fn rms_width(wf: &Wavefunction) -> f64 {
    let rho = probability_density(wf);
    let total: f64 = rho.iter().sum();
    let mean = wf.grid.points().zip(&rho).map(|(x, r)| x * r).sum::<f64>() / total;
    let var = wf
        .grid
        .points()
        .zip(&rho)
        .map(|(x, r)| (x - mean).powi(2) * r)
        .sum::<f64>()
        / total;
    var.sqrt()
}

/// ψ = R·e^{iS/ℏ}, with S unwrapped inside each run of points where
/// ρ > floor. Points at or below the floor carry no phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarForm {
    pub r: Vec<f64>,
    /// `None` where the phase is undefined.
    pub s: Vec<Option<f64>>,
    /// Inclusive index ranges of the valid runs, left to right. More than one
    /// segment means the relative phase offset between segments is not
    /// determined by continuity.
    pub segments: Vec<(usize, usize)>,
    /// arg ψ at the leftmost valid point; S is zero there.
    pub phase_offset: f64,
    pub hbar: f64,
}

impl PolarForm {
    /// R·e^{i(S/ℏ + offset)}, zero where the phase is undefined.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        self.r
            .iter()
            .zip(&self.s)
            .map(|(&r, s)| match s {
                Some(s) => Complex64::from_polar(r, s / self.hbar + self.phase_offset),
                None => Complex64::new(0.0, 0.0),
            })
            .collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.s.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i)
    }
}

fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

pub fn polar_decompose(wf: &Wavefunction, hbar: f64, rho_floor: f64) -> PolarForm {
    let n = wf.amplitudes.len();
    let r: Vec<f64> = wf.amplitudes.iter().map(|c| c.norm()).collect();
    let valid: Vec<bool> = wf.amplitudes.iter().map(|c| c.norm_sqr() > rho_floor).collect();

    let mut segments = Vec::new();
    let mut i = 0;
    while i < n {
        if valid[i] {
            let start = i;
            while i + 1 < n && valid[i + 1] {
                i += 1;
            }
            segments.push((start, i));
        }
        i += 1;
    }

    let phase_offset = segments.first().map_or(0.0, |&(s, _)| wf.amplitudes[s].arg());
    let mut s = vec![None; n];
    for &(start, end) in &segments {
        // Segment starts are placed on the principal branch relative to the
        // global offset.
        let mut unwrapped = wrap(wf.amplitudes[start].arg() - phase_offset);
        s[start] = Some(hbar * unwrapped);
        for k in start + 1..=end {
            let step = (wf.amplitudes[k] * wf.amplitudes[k - 1].conj()).arg();
            unwrapped += step;
            s[k] = Some(hbar * unwrapped);
        }
    }

    PolarForm { r, s, segments, phase_offset, hbar }
}

/// max over interior points of |∂ρ/∂t + ∂j/∂x|, with ∂ρ/∂t a forward
/// difference between the two snapshots and j the time-centred average of the
/// two currents.
pub fn continuity_residual(
    before: &Wavefunction,
    after: &Wavefunction,
    particle: &QuantumParticle,
) -> Result<f64> {
    let dt = after.time - before.time;
    if !(dt > 0.0) {
        return Err(invalid(format!(
            "continuity residual needs after.time > before.time ({} vs {})",
            after.time, before.time
        )));
    }
    if before.grid != after.grid {
        return Err(invalid("continuity residual needs snapshots on the same grid"));
    }
    let rho0 = probability_density(before);
    let rho1 = probability_density(after);
    let j0 = probability_current(before, particle);
    let j1 = probability_current(after, particle);
    let dx = before.grid.dx();
    let n = rho0.len();

    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let drho_dt = (rho1[i] - rho0[i]) / dt;
        let j_plus = 0.5 * (j0[i + 1] + j1[i + 1]);
        let j_minus = 0.5 * (j0[i - 1] + j1[i - 1]);
        let dj_dx = (j_plus - j_minus) / (2.0 * dx);
        worst = worst.max((drho_dt + dj_dx).abs());
    }
    Ok(worst)
}
