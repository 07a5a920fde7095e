use std::io::Write;

use super::field::VelocityField;
use crate::error::{invalid, Error, Result};
use crate::quantum::{Grid1D, QuantumParticle, Wavefunction, DEFAULT_RHO_FLOOR_REL};

/// RK4 substeps per history stride.
pub const DEFAULT_SUBSTEPS: usize = 4;

/// Time-ordered `(t, x)` samples of one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, f64)>,
    pub particle_mass: f64,
}

impl Trajectory {
    pub fn start(&self) -> Option<(f64, f64)> {
        self.samples.first().copied()
    }

    pub fn end(&self) -> Option<(f64, f64)> {
        self.samples.last().copied()
    }
}

/// A trajectory that hit a node or left the grid. `partial` holds every
/// sample reached before the failure.
#[derive(Debug)]
pub struct TrajectoryFailure {
    pub partial: Trajectory,
    pub error: Error,
}

impl From<TrajectoryFailure> for Error {
    fn from(f: TrajectoryFailure) -> Self {
        let t = f.partial.end().map_or(f64::NAN, |(t, _)| t);
        Error::TrajectoryAborted { t, reason: f.error.to_string() }
    }
}

/// Snapshots at a uniform time stride, with their velocity fields.
#[derive(Debug, Clone)]
pub struct WavefunctionHistory {
    snapshots: Vec<Wavefunction>,
    fields: Vec<VelocityField>,
    particle: QuantumParticle,
    stride: f64,
}

impl WavefunctionHistory {
    pub fn new(snapshots: Vec<Wavefunction>, particle: QuantumParticle) -> Result<Self> {
        Self::with_floor(snapshots, particle, DEFAULT_RHO_FLOOR_REL)
    }

    pub fn with_floor(snapshots: Vec<Wavefunction>, particle: QuantumParticle, rho_floor_rel: f64) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(invalid("history needs at least two snapshots"));
        }
        let grid = snapshots[0].grid;
        let stride = snapshots[1].time - snapshots[0].time;
        if !(stride > 0.0) {
            return Err(invalid("history times must increase"));
        }
        for (k, w) in snapshots.iter().enumerate() {
            if w.grid != grid {
                return Err(invalid(format!("snapshot {k} is on a different grid")));
            }
            let expected = snapshots[0].time + k as f64 * stride;
            if (w.time - expected).abs() > 1e-9 * stride.max(expected.abs()) {
                return Err(invalid(format!(
                    "snapshot {k} at t = {} breaks the uniform stride {stride}",
                    w.time
                )));
            }
        }
        let fields = snapshots
            .iter()
            .map(|w| VelocityField::with_relative_floor(w, &particle, rho_floor_rel))
            .collect();
        Ok(WavefunctionHistory { snapshots, fields, particle, stride })
    }

    /// Analytic plane-wave history e^{i(kx − ωt)} at `n` strides of `dt`.
    pub fn plane_wave(grid: Grid1D, k: f64, particle: QuantumParticle, dt: f64, n: usize) -> Result<Self> {
        let snaps = (0..=n)
            .map(|i| Wavefunction::plane_wave(grid, k, &particle, i as f64 * dt))
            .collect();
        Self::new(snaps, particle)
    }

    pub fn snapshots(&self) -> &[Wavefunction] {
        &self.snapshots
    }

    pub fn first(&self) -> &Wavefunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Wavefunction {
        self.snapshots.last().expect("at least two snapshots")
    }

    pub fn particle(&self) -> &QuantumParticle {
        &self.particle
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.snapshots[0].time + k as f64 * self.stride
    }

    fn velocity(&self, k: usize, frac: f64, x: f64) -> Result<f64> {
        let a = self.fields[k].at(x)?;
        if frac == 0.0 {
            return Ok(a);
        }
        let b = self.fields[k + 1].at(x)?;
        Ok((1.0 - frac) * a + frac * b)
    }

    /// RK4 through the history, reporting `(t, x)` at every snapshot time.
    /// On failure returns the error and the last time reached.
    pub(crate) fn integrate(
        &self,
        x0: f64,
        substeps: usize,
        mut record: impl FnMut(f64, f64),
    ) -> std::result::Result<(), Error> {
        let h = 1.0 / substeps as f64;
        let dt = self.stride * h;
        // Validate the starting point against the first snapshot.
        self.velocity(0, 0.0, x0)?;
        let mut x = x0;
        record(self.time(0), x);
        for k in 0..self.len() - 1 {
            for s in 0..substeps {
                let f0 = s as f64 * h;
                let k1 = self.velocity(k, f0, x)?;
                let k2 = self.velocity(k, f0 + 0.5 * h, x + 0.5 * dt * k1)?;
                let k3 = self.velocity(k, f0 + 0.5 * h, x + 0.5 * dt * k2)?;
                let k4 = if s + 1 == substeps {
                    self.velocity(k + 1, 0.0, x + dt * k3)?
                } else {
                    self.velocity(k, f0 + h, x + dt * k3)?
                };
                x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            // The endpoint itself must be inside a valid region.
            self.velocity(k + 1, 0.0, x)?;
            record(self.time(k + 1), x);
        }
        Ok(())
    }
}

/// Integrate dx/dt = v(x, t) from `x0` at the first snapshot time, sampling at
/// every snapshot.
pub fn propagate_trajectory(
    history: &WavefunctionHistory,
    x0: f64,
    substeps: usize,
) -> std::result::Result<Trajectory, TrajectoryFailure> {
    let mut samples = Vec::with_capacity(history.len());
    let result = history.integrate(x0, substeps.max(1), |t, x| samples.push((t, x)));
    let traj = Trajectory { samples, particle_mass: history.particle().mass };
    match result {
        Ok(()) => Ok(traj),
        Err(error) => Err(TrajectoryFailure { partial: traj, error }),
    }
}

/// First pair of neighbouring trajectories (in input order) whose ordering
/// flips or touches at a shared sample.
pub fn first_crossing(trajectories: &[Trajectory]) -> Option<(usize, usize)> {
    for (i, pair) in trajectories.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let ordered = a.samples.iter().zip(&b.samples).all(|(&(_, xa), &(_, xb))| xa < xb);
        if !ordered {
            return Some((i, i + 1));
        }
    }
    None
}

/// CSV with header `particle_id,t,x`.
pub fn write_trajectories_csv<'a, W: Write>(
    trajectories: impl IntoIterator<Item = (usize, &'a Trajectory)>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "particle_id,t,x")?;
    for (id, traj) in trajectories {
        for &(t, x) in &traj.samples {
            writeln!(out, "{id},{t},{x}")?;
        }
    }
    Ok(())
}
