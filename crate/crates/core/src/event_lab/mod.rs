//! Monte Carlo kaon flights and decays in the lab.
//!
//! A kaon leaves the source along the beam line at constant velocity, decays
//! after an exponential proper time, and for 2π channels emits two pions that
//! are isotropic in its rest frame. Event `i` draws from its own RNG
//! substream, so a run is the same for any worker count.

mod io;
mod kinematics;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::kaon::{sample_decay, Channel, Component, KaonParams, KaonState};
use crate::rng::{substream, tag};

pub use io::{read_events_jsonl, write_events_csv, write_events_jsonl, EventRecord};
pub use kinematics::{boost, energy, isotropic_direction, two_body_momentum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Metres.
    pub source: Vector3<f64>,
    /// Unit vector.
    pub direction: Vector3<f64>,
    /// MeV/c.
    pub momentum: f64,
    /// Relative Gaussian spread of the beam momentum; zero for a
    /// monochromatic beam.
    pub momentum_spread: f64,
    /// K_L amplitude of the initial state.
    pub a: Complex64,
    /// K_S amplitude of the initial state.
    pub b: Complex64,
}

impl BeamSpec {
    pub fn new(source: Vector3<f64>, direction: Vector3<f64>, momentum: f64, a: Complex64, b: Complex64) -> Result<Self> {
        let beam = BeamSpec { source, direction, momentum, momentum_spread: 0.0, a, b };
        beam.validate()?;
        Ok(beam)
    }

    /// Pointlike source at the origin, beam along +z.
    pub fn along_z(momentum: f64, a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(Vector3::zeros(), Vector3::z(), momentum, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.direction.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("beam direction must be a unit vector, |d| = {}", self.direction.norm())));
        }
        if !(self.momentum > 0.0 && self.momentum.is_finite()) {
            return Err(invalid(format!("beam momentum must be positive, got {}", self.momentum)));
        }
        if !(self.momentum_spread >= 0.0) {
            return Err(invalid("beam momentum spread must be non-negative"));
        }
        KaonState::new(self.a, self.b)?;
        Ok(())
    }

    pub fn initial_state(&self) -> KaonState {
        KaonState { a: self.a, b: self.b, t: 0.0 }
    }
}

/// Ground truth for one generated kaon.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEvent {
    pub event_id: u64,
    pub component: Component,
    pub channel: Channel,
    /// Metres.
    pub true_vertex: Vector3<f64>,
    /// Seconds, lab frame.
    pub true_lab_time: f64,
    /// Seconds, kaon rest frame.
    pub true_proper_time: f64,
    /// MeV/c.
    pub kaon_momentum: Vector3<f64>,
    /// MeV/c, 2π channels only.
    pub daughters: Option<[Vector3<f64>; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    /// σ(|p|)/|p|.
    pub relative_momentum_resolution: f64,
    /// Per-axis Gaussian tilt of the momentum direction, radians.
    pub angular_resolution: f64,
    pub seed: u64,
}

impl DetectorSpec {
    pub fn perfect(seed: u64) -> Self {
        DetectorSpec { relative_momentum_resolution: 0.0, angular_resolution: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_momentum_resolution >= 0.0 && self.angular_resolution >= 0.0) {
            return Err(invalid("detector resolutions must be non-negative"));
        }
        Ok(())
    }
}

/// One kaon from substream `(seed, event_id)`.
pub fn generate_event(beam: &BeamSpec, params: &KaonParams, seed: u64, event_id: u64) -> DecayEvent {
    let mut rng = substream(seed, tag::GENERATE, event_id);
    let decay = sample_decay(&beam.initial_state(), params, &mut rng);

    let p_mag = if beam.momentum_spread > 0.0 {
        let n = Normal::new(0.0, beam.momentum_spread).expect("validated spread");
        (beam.momentum * (1.0 + n.sample(&mut rng))).max(f64::MIN_POSITIVE)
    } else {
        beam.momentum
    };
    let m_k = params.m_k;
    let e_k = energy(p_mag, m_k);
    let gamma = e_k / m_k;
    let c = params.c;
    let lab_time = gamma * decay.t_decay;
    // βγc·τ = (p/m)·c·τ
    let flight = p_mag / m_k * c * decay.t_decay;
    let kaon_momentum = beam.direction * p_mag;

    let daughters = params.two_pi_masses(decay.channel).map(|(m1, m2)| {
        let p_star = two_body_momentum(m_k, m1, m2).expect("kaon is above the 2π threshold");
        let dir = isotropic_direction(&mut rng);
        let beta = kaon_momentum / e_k;
        let (_, p1) = boost(energy(p_star, m1), dir * p_star, &beta);
        let (_, p2) = boost(energy(p_star, m2), -dir * p_star, &beta);
        [p1, p2]
    });

    DecayEvent {
        event_id,
        component: decay.component,
        channel: decay.channel,
        true_vertex: beam.source + beam.direction * flight,
        true_lab_time: lab_time,
        true_proper_time: decay.t_decay,
        kaon_momentum,
        daughters,
    }
}

pub fn generate_events(beam: &BeamSpec, params: &KaonParams, seed: u64, n: usize, exec: Execution) -> Vec<DecayEvent> {
    exec.map_range(n, |i| generate_event(beam, params, seed, i as u64))
}

fn perpendicular_basis(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}

fn smear_one<R: Rng + ?Sized>(p: &Vector3<f64>, det: &DetectorSpec, rng: &mut R) -> Vector3<f64> {
    let mut out = *p;
    if det.angular_resolution > 0.0 {
        let n = Normal::new(0.0, det.angular_resolution).expect("validated resolution");
        let (tx, ty) = (n.sample(rng), n.sample(rng));
        let alpha = tx.hypot(ty);
        if alpha > 0.0 {
            let d = p.normalize();
            let (e1, e2) = perpendicular_basis(&d);
            let u = (e1 * tx + e2 * ty) / alpha;
            out = (d * alpha.cos() + u * alpha.sin()) * p.norm();
        }
    }
    if det.relative_momentum_resolution > 0.0 {
        let n = Normal::new(0.0, det.relative_momentum_resolution).expect("validated resolution");
        out *= 1.0 + n.sample(rng);
    }
    out
}

/// Measured daughter momenta; `None` for channels without kinematics. The
/// draws come from substream `(det.seed, event_id)`.
pub fn smear_measurement(event: &DecayEvent, det: &DetectorSpec) -> Option<[Vector3<f64>; 2]> {
    let [p1, p2] = event.daughters?;
    let mut rng = substream(det.seed, tag::SMEAR, event.event_id);
    let m1 = smear_one(&p1, det, &mut rng);
    let m2 = smear_one(&p2, det, &mut rng);
    Some([m1, m2])
}
