use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};

/// E = √(p² + m²).
pub fn energy(p: f64, m: f64) -> f64 {
    p.hypot(m)
}

/// Daughter momentum in the rest frame of a parent of mass `parent`:
/// p* = √((M² − (m1+m2)²)(M² − (m1−m2)²)) / 2M.
pub fn two_body_momentum(parent: f64, m1: f64, m2: f64) -> Result<f64> {
    let sum = m1 + m2;
    if parent < sum {
        return Err(Error::BelowThreshold { parent, daughters: sum });
    }
    let diff = m1 - m2;
    let m2p = parent * parent;
    Ok(((m2p - sum * sum) * (m2p - diff * diff)).max(0.0).sqrt() / (2.0 * parent))
}

/// Uniform direction on the unit sphere.
pub fn isotropic_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let cos_theta: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    Vector3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta)
}

/// Lorentz boost of (E, p) into the frame where the original rest frame moves
/// with velocity `beta` (in units of c).
pub fn boost(e: f64, p: Vector3<f64>, beta: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let b2 = beta.norm_squared();
    if b2 == 0.0 {
        return (e, p);
    }
    let gamma = 1.0 / (1.0 - b2).sqrt();
    let bp = beta.dot(&p);
    let e_out = gamma * (e + bp);
    let p_out = p + beta * ((gamma - 1.0) * bp / b2 + gamma * e);
    (e_out, p_out)
}
