//! Free wave-packet spreading of decay products and the vertex and
//! proper-time errors it induces over real flight distances.
//!
//! Widths follow σ(t) = σ₀·√(1 + (ℏt / 2mσ₀²)²) with ℏ/m = ℏc²/m in lab units.
//! Two frame conventions are offered:
//!
//! * `rest_frame`: the packet spreads in its own frame for the proper time
//!   t/γ. The transverse width is carried to the lab unchanged, the
//!   longitudinal spreading term is further divided by γ².
//! * `lab`: nonrelativistic spreading for the full lab time, both directions.
//!
//! The vertex inherits the transverse width of one track at the tracker.
//! Proper time τ = L·m_K/(p_K c) then carries
//! δτ/τ = √((σ_T/L)² + (σ_pK/p_K)²), where the kaon momentum uncertainty
//! σ_pK = √2·ℏc/(2σ₀) comes from the two pion packets.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::event_lab::BeamSpec;
use crate::exec::Execution;
use crate::kaon::KaonParams;
use crate::quantum::{
    evolve, free_gaussian_width, init_gaussian_packet, rms_width, EvolveOptions, Grid1D, Potential,
    QuantumParticle,
};
use crate::units::PhysicalConstants;

/// Smallness of the CP effect the errors are compared against.
pub const SIGNAL_SCALE: f64 = 1e-3;

/// Flight distances in metres used when none are configured.
pub const DEFAULT_DISTANCES: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    /// Initial RMS width, metres (or natural length).
    pub sigma0: f64,
    /// MeV.
    pub mass: f64,
    /// MeV/c.
    pub momentum: f64,
}

impl PacketSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(invalid(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid(format!("packet mass must be positive, got {}", self.mass)));
        }
        if !(self.momentum >= 0.0 && self.momentum.is_finite()) {
            return Err(invalid(format!("packet momentum must be non-negative, got {}", self.momentum)));
        }
        Ok(())
    }

    /// ℏ/m = ℏc²/m in length²/time.
    pub fn hbar_over_mass(&self, consts: &PhysicalConstants) -> f64 {
        consts.hbar * consts.c * consts.c / self.mass
    }

    pub fn gamma(&self) -> f64 {
        self.momentum.hypot(self.mass) / self.mass
    }

    pub fn beta(&self) -> f64 {
        self.momentum / self.momentum.hypot(self.mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    RestFrame,
    Lab,
}

/// Width after spreading for `t` in the frame where the packet is at rest.
pub fn analytic_sigma(packet: &PacketSpec, t: f64, consts: &PhysicalConstants) -> f64 {
    free_gaussian_width(packet.sigma0, packet.hbar_over_mass(consts), t)
}

/// A grid centred on the packet that resolves it (dx = σ₀/20) and holds it
/// out to ten widths at time `t`.
pub fn default_grid(packet: &PacketSpec, t: f64, consts: &PhysicalConstants) -> Result<Grid1D> {
    let half = 10.0 * analytic_sigma(packet, t, consts);
    let dx = packet.sigma0 / 20.0;
    let n = (2.0 * half / dx).ceil() as usize + 1;
    Grid1D::new(-half, half, n)
}

/// RMS width of a packet evolved with Crank–Nicolson for time `t`.
pub fn numerical_sigma(packet: &PacketSpec, t: f64, grid: &Grid1D, consts: &PhysicalConstants) -> Result<f64> {
    packet.validate()?;
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be non-negative, got {t}")));
    }
    let dx = grid.dx();
    if dx > packet.sigma0 / 10.0 {
        return Err(invalid(format!("grid spacing {dx} does not resolve sigma0 = {} (need dx <= sigma0/10)", packet.sigma0)));
    }
    let center = 0.5 * (grid.x_min() + grid.x_max());
    let wf = init_gaussian_packet(*grid, center, packet.sigma0, 0.0)?;
    if t == 0.0 {
        return Ok(rms_width(&wf));
    }
    let h_over_m = packet.hbar_over_mass(consts);
    let particle = QuantumParticle::new(1.0, h_over_m)?;
    // Keep ℏΔt/m ≤ dx²/2 so the time error stays well under the spatial one.
    let n_steps = ((t * h_over_m / (0.5 * dx * dx)).ceil() as usize).max(200);
    let dt = t / n_steps as f64;
    let out = evolve(&wf, &Potential::zero(grid), &particle, dt, n_steps, &EvolveOptions::default())?;
    Ok(rms_width(&out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Packet width at least the flight distance.
    Unresolved,
    /// Spreading term below one: width ≈ σ₀.
    Static,
    Spreading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingRow {
    /// Metres.
    pub flight_distance: f64,
    /// Lab seconds.
    pub flight_time: f64,
    /// Transverse width at the end of the flight, metres.
    pub sigma_t: f64,
    pub sigma_longitudinal: f64,
    pub relative_vertex_error: f64,
    pub relative_tau_error: f64,
    pub ratio_to_signal: f64,
    pub below_signal: bool,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadingReport {
    pub frame: Frame,
    pub packet: PacketSpec,
    pub kaon_momentum: f64,
    pub signal_scale: f64,
    /// Distance at which ℏt/(2mσ₀²) = 1 in the chosen frame.
    pub crossover_distance: f64,
    /// Per-pion momentum spread ℏc/(2σ₀), MeV/c.
    pub momentum_spread: f64,
    pub rows: Vec<SpreadingRow>,
}

/// One row per flight distance, in the given (ascending) order.
pub fn error_budget(
    packet: &PacketSpec,
    distances: &[f64],
    beam: &BeamSpec,
    params: &KaonParams,
    frame: Frame,
    exec: Execution,
) -> Result<SpreadingReport> {
    packet.validate()?;
    beam.validate()?;
    if packet.momentum == 0.0 {
        return Err(invalid("packet momentum must be positive to define a flight time"));
    }
    if distances.is_empty() {
        return Err(invalid("no flight distances given"));
    }
    if distances.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid("flight distances must be positive"));
    }
    if distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("flight distances must be strictly ascending"));
    }
    let consts = PhysicalConstants { hbar: params.hbar, c: params.c };
    consts.validate()?;

    let (beta, gamma) = (packet.beta(), packet.gamma());
    let h_over_m = packet.hbar_over_mass(&consts);
    let s0 = packet.sigma0;
    let spreading_time = 2.0 * packet.mass * s0 * s0 / (params.hbar * params.c * params.c);
    let crossover_distance = match frame {
        Frame::RestFrame => spreading_time * gamma * beta * params.c,
        Frame::Lab => spreading_time * beta * params.c,
    };
    let momentum_spread = params.hbar * params.c / (2.0 * s0);
    let kaon_rel = std::f64::consts::SQRT_2 * momentum_spread / beam.momentum;

    let rows = exec.map_slice(distances, |_, &l| {
        let flight_time = l / (beta * params.c);
        let (spread_t, long_factor) = match frame {
            Frame::RestFrame => (flight_time / gamma, 1.0 / (gamma * gamma)),
            Frame::Lab => (flight_time, 1.0),
        };
        let sigma_t = free_gaussian_width(s0, h_over_m, spread_t);
        let sigma_longitudinal = free_gaussian_width(s0, h_over_m * long_factor, spread_t);
        let relative_vertex_error = sigma_t / l;
        let relative_tau_error = relative_vertex_error.hypot(kaon_rel);
        let regime = if sigma_t >= l {
            Regime::Unresolved
        } else if l < crossover_distance {
            Regime::Static
        } else {
            Regime::Spreading
        };
        SpreadingRow {
            flight_distance: l,
            flight_time,
            sigma_t,
            sigma_longitudinal,
            relative_vertex_error,
            relative_tau_error,
            ratio_to_signal: relative_tau_error / SIGNAL_SCALE,
            below_signal: relative_tau_error < SIGNAL_SCALE,
            regime,
        }
    });

    Ok(SpreadingReport {
        frame,
        packet: *packet,
        kaon_momentum: beam.momentum,
        signal_scale: SIGNAL_SCALE,
        crossover_distance,
        momentum_spread,
        rows,
    })
}

pub fn write_report_csv<W: Write>(report: &SpreadingReport, mut out: W) -> Result<()> {
    writeln!(
        out,
        "flight_distance,flight_time,sigma_t,relative_vertex_error,relative_tau_error,sigma_longitudinal,ratio_to_signal,regime"
    )?;
    for r in &report.rows {
        let regime = match r.regime {
            Regime::Unresolved => "unresolved",
            Regime::Static => "static",
            Regime::Spreading => "spreading",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.flight_distance,
            r.flight_time,
            r.sigma_t,
            r.relative_vertex_error,
            r.relative_tau_error,
            r.sigma_longitudinal,
            r.ratio_to_signal,
            regime
        )?;
    }
    Ok(())
}

pub fn render_text_table(report: &SpreadingReport) -> String {
    let mut s = String::new();
    let p = &report.packet;
    let _ = writeln!(s, "# packet: sigma0 = {:e} m, mass = {} MeV, momentum = {} MeV/c", p.sigma0, p.mass, p.momentum);
    let _ = writeln!(s, "# kaon momentum = {} MeV/c, frame = {:?}", report.kaon_momentum, report.frame);
    match report.frame {
        Frame::RestFrame => {
            let _ = writeln!(s, "# sigma_T = sigma0*sqrt(1+(hbar*t'/(2m*sigma0^2))^2), t' = t/gamma; longitudinal term / gamma^2");
        }
        Frame::Lab => {
            let _ = writeln!(s, "# sigma_T = sigma_L = sigma0*sqrt(1+(hbar*t/(2m*sigma0^2))^2), t = lab time");
        }
    }
    let _ = writeln!(s, "# tau error: sqrt((sigma_T/L)^2 + (sqrt(2)*hbar*c/(2*sigma0)/p_K)^2)");
    let _ = writeln!(s, "# results are conditional on sigma0 and the frame convention above");
    let _ = writeln!(s, "# crossover distance = {:.4e} m, signal scale = {:e}", report.crossover_distance, report.signal_scale);
    let _ = writeln!(
        s,
        "{:>12}  {:>12}  {:>12}  {:>12}  {:>12}  {:>12}  {:>10}",
        "L [m]", "t [s]", "sigma_T [m]", "dx/L", "dtau/tau", "/1e-3", "regime"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>12.4e}  {:>12.4e}  {:>12.4e}  {:>12.4e}  {:>12.4e}  {:>12.4e}  {:>10}",
            r.flight_distance,
            r.flight_time,
            r.sigma_t,
            r.relative_vertex_error,
            r.relative_tau_error,
            r.ratio_to_signal,
            format!("{:?}", r.regime).to_lowercase()
        );
    }
    s
}

/// log-log plot of the relative vertex and proper-time errors against L,
/// with the signal scale as a horizontal line.
pub fn render_svg(report: &SpreadingReport) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let xs: Vec<f64> = report.rows.iter().map(|r| r.flight_distance.log10()).collect();
    let series = [
        ("steelblue", report.rows.iter().map(|r| r.relative_vertex_error.log10()).collect::<Vec<_>>()),
        ("darkorange", report.rows.iter().map(|r| r.relative_tau_error.log10()).collect::<Vec<_>>()),
    ];
    let signal = report.signal_scale.log10();
    let all_y = series.iter().flat_map(|(_, ys)| ys.iter().copied()).chain([signal]);
    let (y_lo, y_hi) = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let sx = |x: f64| pad + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y_lo) / (y_hi - y_lo).max(1e-12) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (color, ys) in &series {
        let pts: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
    }
    let ys = sy(signal);
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{ys:.2}" x2="{}" y2="{ys:.2}" stroke="red" stroke-dasharray="4"/>"#, w - pad);
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="{}" font-size="12">log10 L [m]; blue: sigma_T/L, orange: dtau/tau, red: signal scale</text>"#,
        h - 15.0
    );
    s.push_str("</svg>\n");
    s
}
