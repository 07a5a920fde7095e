//! Straight-line retrodiction of the decay vertex from measured pion momenta,
//! kaon momentum and proper time, and the K_S-like / K_L-like decision.

mod report;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::event_lab::EventRecord;
use crate::exec::Execution;
use crate::kaon::{Component, KaonParams};

pub use report::{analyze_run, render_svg_histogram, render_text_table, RunReport, TIE_BREAK};

/// A straight line through `point` along unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub point: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Track {
    pub fn new(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("track direction must be a non-zero vector"));
        }
        Ok(Track { point, direction: direction / n })
    }
}

/// Midpoint of the common perpendicular of two lines and its length.
pub fn retrodict_vertex(a: &Track, b: &Track, parallel_tolerance: f64) -> Result<(Vector3<f64>, f64)> {
    let cross = a.direction.cross(&b.direction);
    let cos = a.direction.dot(&b.direction);
    let angle = cross.norm().atan2(cos.abs());
    if angle <= parallel_tolerance {
        return Err(Error::DegenerateGeometry { angle, tolerance: parallel_tolerance });
    }
    let w0 = a.point - b.point;
    let d = a.direction.dot(&w0);
    let e = b.direction.dot(&w0);
    // |d1 × d2|² = 1 − (d1·d2)², without the cancellation at small angles.
    let denom = cross.norm_squared();
    let s = (cos * e - d) / denom;
    let t = (e - cos * d) / denom;
    let pa = a.point + a.direction * s;
    let pb = b.point + b.direction * t;
    Ok(((pa + pb) * 0.5, (pa - pb).norm()))
}

/// p_K = p₁ + p₂.
pub fn kaon_momentum(p1: &Vector3<f64>, p2: &Vector3<f64>) -> Vector3<f64> {
    p1 + p2
}

/// τ = L·m_K / (|p_K|·c) for a straight flight from `source` to `vertex`.
pub fn proper_time(source: &Vector3<f64>, vertex: &Vector3<f64>, p_kaon: f64, m_k: f64, c: f64) -> Result<f64> {
    if !(p_kaon > 0.0) {
        return Err(invalid(format!("kaon momentum must be positive, got {p_kaon}")));
    }
    Ok((vertex - source).norm() * m_k / (p_kaon * c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "KS_like")]
    KsLike,
    #[serde(rename = "KL_like")]
    KlLike,
}

/// K_L-like iff `proper_time > cut · τ_S`; a tie is K_S-like.
pub fn classify(proper_time: f64, params: &KaonParams, cut_in_tau_s: f64) -> Label {
    if proper_time > cut_in_tau_s * params.tau_s {
        Label::KlLike
    } else {
        Label::KsLike
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedEvent {
    pub event_id: u64,
    pub true_component: Component,
    pub vertex: Vector3<f64>,
    pub vertex_gap: f64,
    pub p_kaon: Vector3<f64>,
    pub lab_time: f64,
    pub proper_time: f64,
    pub label: Label,
    /// |vertex − true vertex|, metres.
    pub vertex_error: f64,
    /// Reconstructed minus true proper time over true proper time.
    pub tau_rel_error: f64,
}

/// Geometry and selection used to reconstruct a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSetup {
    /// Kaon source, metres; known exactly.
    pub source: [f64; 3],
    /// Distance along each true pion path from the vertex to its measured
    /// hit, metres.
    pub lever_arm: f64,
    /// Selection cut in units of τ_S.
    pub cut: f64,
    /// Tracks closer than this opening angle (radians) are rejected.
    pub parallel_tolerance: f64,
}

impl AnalysisSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.cut > 0.0) {
            return Err(invalid(format!("cut must be positive, got {}", self.cut)));
        }
        if !(self.lever_arm > 0.0) {
            return Err(invalid(format!("lever_arm must be positive, got {}", self.lever_arm)));
        }
        if !(self.parallel_tolerance >= 0.0) {
            return Err(invalid("parallel_tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Tracks through the true hits along the measured directions.
pub fn tracks_for(record: &EventRecord, lever_arm: f64) -> Option<Result<[Track; 2]>> {
    let truth = record.p_true()?;
    let meas = record.p_meas().unwrap_or(truth);
    let vertex = record.true_vertex();
    let make = |t: &Vector3<f64>, m: &Vector3<f64>| Track::new(vertex + t.normalize() * lever_arm, *m);
    Some(make(&truth[0], &meas[0]).and_then(|a| make(&truth[1], &meas[1]).map(|b| [a, b])))
}

/// Full chain for one 2π event; `None` for other channels.
pub fn reconstruct_event(record: &EventRecord, setup: &AnalysisSetup, params: &KaonParams) -> Option<Result<ReconstructedEvent>> {
    let tracks = tracks_for(record, setup.lever_arm)?;
    let meas = record.p_meas().or_else(|| record.p_true())?;
    Some(tracks.and_then(|[a, b]| {
        let (vertex, gap) = retrodict_vertex(&a, &b, setup.parallel_tolerance)?;
        let p_kaon = kaon_momentum(&meas[0], &meas[1]);
        let source = Vector3::from(setup.source);
        let p = p_kaon.norm();
        let tau = proper_time(&source, &vertex, p, params.m_k, params.c)?;
        let gamma = p.hypot(params.m_k) / params.m_k;
        let truth = record.true_proper_time;
        Ok(ReconstructedEvent {
            event_id: record.event_id,
            true_component: record.component,
            vertex,
            vertex_gap: gap,
            p_kaon,
            lab_time: gamma * tau,
            proper_time: tau,
            label: classify(tau, params, setup.cut),
            vertex_error: (vertex - record.true_vertex()).norm(),
            tau_rel_error: if truth > 0.0 { (tau - truth) / truth } else { tau },
        })
    }))
}

/// Reconstruct every 2π event, in input order.
pub fn reconstruct_all(
    records: &[EventRecord],
    setup: &AnalysisSetup,
    params: &KaonParams,
    exec: Execution,
) -> Vec<Option<Result<ReconstructedEvent>>> {
    exec.map_slice(records, |_, r| reconstruct_event(r, setup, params))
}
