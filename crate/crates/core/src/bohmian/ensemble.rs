use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::WavefunctionHistory;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::quantum::{probability_density, Wavefunction};
use crate::rng::{substream, tag};

/// Above this fraction of failed trajectories the equivariance check is
/// reported as invalid.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

/// Grid cells aggregated into one histogram bin.
const CELLS_PER_BIN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Positions distributed as |ψ|².
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_particles: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

impl EnsembleSpec {
    pub fn equilibrium(n_particles: usize, seed: u64) -> Self {
        EnsembleSpec { n_particles, seed, sampling: Sampling::Equilibrium }
    }
}

/// Cumulative trapezoid integral of ρ at the grid nodes.
fn cumulative(wf: &Wavefunction) -> Vec<f64> {
    let rho = probability_density(wf);
    let dx = wf.grid.dx();
    let mut cdf = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in rho.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * dx;
        cdf.push(acc);
    }
    cdf
}

/// I.i.d. draws from |ψ|² by inverting the piecewise-linear CDF. Particle `i`
/// uses its own substream of `spec.seed`.
pub fn sample_equilibrium_ensemble(wf: &Wavefunction, spec: &EnsembleSpec, exec: Execution) -> Result<Vec<f64>> {
    if spec.n_particles == 0 {
        return Err(invalid("ensemble needs at least one particle"));
    }
    let cdf = cumulative(wf);
    let total = *cdf.last().expect("grid has points");
    if !(total > 0.0 && total.is_finite()) {
        return Err(invalid("cannot sample from a wavefunction with zero norm"));
    }
    let grid = wf.grid;
    let dx = grid.dx();
    Ok(exec.map_range(spec.n_particles, |i| {
        let mut rng = substream(spec.seed, tag::ENSEMBLE, i as u64);
        let target = rng.random::<f64>() * total;
        // First node with cdf >= target; the cell is [j-1, j].
        let j = cdf.partition_point(|&c| c < target).clamp(1, cdf.len() - 1);
        let (lo, hi) = (cdf[j - 1], cdf[j]);
        let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.5 };
        grid.x(j - 1) + frac * dx
    }))
}

/// Final position of every particle, or the error that stopped it.
pub fn propagate_final_positions(
    history: &WavefunctionHistory,
    starts: &[f64],
    substeps: usize,
    exec: Execution,
) -> Vec<std::result::Result<f64, Error>> {
    exec.map_slice(starts, |_, &x0| {
        let mut last = x0;
        history.integrate(x0, substeps.max(1), |_, x| last = x).map(|()| last)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub n: usize,
    pub failures: usize,
    pub final_time: f64,
    pub bin_width: f64,
    /// ∑_bins |fraction of particles − ∫ρ over bin|.
    pub l1_distance: f64,
    /// Expected L1 from sampling noise alone, ∑ √(2P(1−P)/πn).
    pub statistical_l1: f64,
    /// False when more than [`MAX_FAILURE_FRACTION`] of trajectories failed.
    pub valid: bool,
}

/// Sample the first snapshot, transport every particle to the last snapshot
/// and compare the histogram with |ψ|² there.
pub fn equivariance_check(
    history: &WavefunctionHistory,
    spec: &EnsembleSpec,
    substeps: usize,
    exec: Execution,
) -> Result<EquivarianceReport> {
    let starts = sample_equilibrium_ensemble(history.first(), spec, exec)?;
    let finals = propagate_final_positions(history, &starts, substeps, exec);
    let last = history.last();
    let grid = last.grid;

    let n_cells = grid.len() - 1;
    let n_bins = n_cells.div_ceil(CELLS_PER_BIN);
    let bin_width = CELLS_PER_BIN as f64 * grid.dx();

    // Exact bin probabilities from the final density.
    let cdf = cumulative(last);
    let total = *cdf.last().expect("grid has points");
    let probs: Vec<f64> = (0..n_bins)
        .map(|b| {
            let lo = b * CELLS_PER_BIN;
            let hi = ((b + 1) * CELLS_PER_BIN).min(n_cells);
            (cdf[hi] - cdf[lo]) / total
        })
        .collect();

    let mut counts = vec![0usize; n_bins];
    let mut failures = 0usize;
    for r in &finals {
        match r {
            Ok(x) => {
                let cell = (((x - grid.x_min()) / grid.dx()).floor() as usize).min(n_cells - 1);
                counts[cell / CELLS_PER_BIN] += 1;
            }
            Err(_) => failures += 1,
        }
    }
    let n_ok = spec.n_particles - failures;
    let l1_distance = if n_ok == 0 {
        f64::INFINITY
    } else {
        counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| (c as f64 / n_ok as f64 - p).abs())
            .sum()
    };
    let statistical_l1 = probs
        .iter()
        .map(|&p| (2.0 * p * (1.0 - p) / (PI * n_ok.max(1) as f64)).sqrt())
        .sum();

    Ok(EquivarianceReport {
        n: spec.n_particles,
        failures,
        final_time: last.time,
        bin_width,
        l1_distance,
        statistical_l1,
        valid: failures as f64 <= MAX_FAILURE_FRACTION * spec.n_particles as f64,
    })
}
