//! The neutral-kaon two-state system.
//!
//! States are written in the (K_L, K_S) basis with
//! K_L = (p·K⁰ − q·K̄⁰)/N and K_S = (p·K⁰ + q·K̄⁰)/N, N = √(|p|² + |q|²).
//! Each component decays as exp(−Γt/2)·exp(−imt/ℏ).
//!
//! The common rest-mass phase exp(−i·m_K·t/ℏ) is factored out of the stored
//! amplitudes: at t ~ 10⁻¹⁰ s it is ~10¹³ rad and would swamp the Δm phase in
//! f64. Only intensities and the K_L–K_S relative phase are observable, so
//! nothing physical changes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{C_M_PER_S, HBAR_MEV_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "K_L")]
    KL,
    #[serde(rename = "K_S")]
    KS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// K_L → π^± e^∓ ν
    PiENu,
    /// K_L → π^± μ^∓ ν
    PiMuNu,
    /// K_L → 3π
    ThreePi,
    /// K_L → π⁺π⁻, the CP-violating mode.
    TwoPi,
    /// K_S → π⁺π⁻
    PiPlusPiMinus,
    /// K_S → π⁰π⁰
    TwoPiZero,
}

impl Channel {
    pub fn is_two_pi(self) -> bool {
        matches!(self, Channel::TwoPi | Channel::PiPlusPiMinus | Channel::TwoPiZero)
    }

    pub fn component(self) -> Component {
        match self {
            Channel::PiPlusPiMinus | Channel::TwoPiZero => Component::KS,
            _ => Component::KL,
        }
    }
}

/// Mixing coefficients p, q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingParams {
    pub p: Complex64,
    pub q: Complex64,
}

impl MixingParams {
    pub fn new(p: Complex64, q: Complex64) -> Result<Self> {
        if !(p.norm_sqr() + q.norm_sqr() > 0.0) {
            return Err(invalid("mixing needs |p|² + |q|² > 0"));
        }
        Ok(MixingParams { p, q })
    }
}

/// ⟨K_L|K_S⟩ = (|p|² − |q|²)/(|p|² + |q|²). Nonzero means CP violation.
pub fn overlap(mixing: &MixingParams) -> Result<f64> {
    let pp = mixing.p.norm_sqr();
    let qq = mixing.q.norm_sqr();
    let sum = pp + qq;
    if !(sum > 0.0) {
        return Err(invalid("overlap undefined for p = q = 0"));
    }
    Ok((pp - qq) / sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KLBranching {
    pub pi_e_nu: f64,
    pub pi_mu_nu: f64,
    pub three_pi: f64,
    pub two_pi: f64,
}

impl Default for KLBranching {
    fn default() -> Self {
        KLBranching { pi_e_nu: 0.39, pi_mu_nu: 0.27, three_pi: 0.339, two_pi: 0.001 }
    }
}

impl KLBranching {
    pub fn entries(&self) -> [(Channel, f64); 4] {
        [
            (Channel::PiENu, self.pi_e_nu),
            (Channel::PiMuNu, self.pi_mu_nu),
            (Channel::ThreePi, self.three_pi),
            (Channel::TwoPi, self.two_pi),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSBranching {
    pub pi_plus_pi_minus: f64,
    pub two_pi_zero: f64,
}

impl Default for KSBranching {
    fn default() -> Self {
        KSBranching { pi_plus_pi_minus: 0.69, two_pi_zero: 0.31 }
    }
}

impl KSBranching {
    pub fn entries(&self) -> [(Channel, f64); 2] {
        [(Channel::PiPlusPiMinus, self.pi_plus_pi_minus), (Channel::TwoPiZero, self.two_pi_zero)]
    }
}

/// Masses in MeV, lifetimes in seconds, ℏ in MeV·s, c in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KaonParams {
    /// Mean neutral-kaon mass; the reference for the factored-out phase.
    pub m_k: f64,
    /// m_L − m_S.
    pub delta_m: f64,
    pub tau_l: f64,
    pub tau_s: f64,
    pub m_pi_charged: f64,
    pub m_pi_neutral: f64,
    pub hbar: f64,
    /// Speed of light, m/s.
    pub c: f64,
    pub branching_l: KLBranching,
    pub branching_s: KSBranching,
}

impl Default for KaonParams {
    fn default() -> Self {
        KaonParams {
            m_k: 497.611,
            delta_m: 3.48e-12,
            tau_l: 5.12e-8,
            tau_s: 1e-10,
            m_pi_charged: 139.570,
            m_pi_neutral: 134.9768,
            hbar: HBAR_MEV_S,
            c: C_M_PER_S,
            branching_l: KLBranching::default(),
            branching_s: KSBranching::default(),
        }
    }
}

const BRANCHING_SUM_TOL: f64 = 1e-9;

impl KaonParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_k", self.m_k),
            ("tau_l", self.tau_l),
            ("tau_s", self.tau_s),
            ("m_pi_charged", self.m_pi_charged),
            ("m_pi_neutral", self.m_pi_neutral),
            ("hbar", self.hbar),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.delta_m.is_finite() {
            return Err(invalid("delta_m must be finite"));
        }
        if !(self.gamma_s() > self.gamma_l()) {
            return Err(invalid("need gamma_S > gamma_L (tau_S < tau_L)"));
        }
        let check = |name: &str, fractions: &[f64]| -> Result<()> {
            if fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
                return Err(invalid(format!("{name} fractions must lie in [0, 1]")));
            }
            let sum: f64 = fractions.iter().sum();
            if (sum - 1.0).abs() > BRANCHING_SUM_TOL {
                return Err(invalid(format!("{name} fractions sum to {sum}, not 1")));
            }
            Ok(())
        };
        check("K_L branching", &self.branching_l.entries().map(|e| e.1))?;
        check("K_S branching", &self.branching_s.entries().map(|e| e.1))?;
        Ok(())
    }

    pub fn gamma_l(&self) -> f64 {
        1.0 / self.tau_l
    }

    pub fn gamma_s(&self) -> f64 {
        1.0 / self.tau_s
    }

    pub fn m_l(&self) -> f64 {
        self.m_k + 0.5 * self.delta_m
    }

    pub fn m_s(&self) -> f64 {
        self.m_k - 0.5 * self.delta_m
    }

    pub fn tau(&self, component: Component) -> f64 {
        match component {
            Component::KL => self.tau_l,
            Component::KS => self.tau_s,
        }
    }

    /// Daughter masses for a 2π channel.
    pub fn two_pi_masses(&self, channel: Channel) -> Option<(f64, f64)> {
        match channel {
            Channel::TwoPi | Channel::PiPlusPiMinus => Some((self.m_pi_charged, self.m_pi_charged)),
            Channel::TwoPiZero => Some((self.m_pi_neutral, self.m_pi_neutral)),
            _ => None,
        }
    }

    fn branching_fraction(&self, channel: Channel) -> f64 {
        self.branching_l
            .entries()
            .into_iter()
            .chain(self.branching_s.entries())
            .find(|(c, _)| *c == channel)
            .map_or(0.0, |(_, f)| f)
    }

    pub fn br_two_pi_l(&self) -> f64 {
        self.branching_fraction(Channel::TwoPi)
    }
}

/// a·|K_L⟩ + b·|K_S⟩ at time `t` (rest-mass phase removed, see module docs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaonState {
    pub a: Complex64,
    pub b: Complex64,
    pub t: f64,
}

impl KaonState {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        if !(a.norm_sqr() + b.norm_sqr() > 0.0) || !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
            return Err(invalid("kaon state needs finite, not-both-zero a and b"));
        }
        Ok(KaonState { a, b, t: 0.0 })
    }

    pub fn pure(component: Component) -> Self {
        let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        match component {
            Component::KL => KaonState { a: one, b: zero, t: 0.0 },
            Component::KS => KaonState { a: zero, b: one, t: 0.0 },
        }
    }
}

fn decay_factor(gamma: f64, mass_offset: f64, hbar: f64, dt: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * gamma * dt).exp(), -mass_offset * dt / hbar)
}

/// a ← a·e^{−Γ_L dt/2}·e^{−i m_L dt/ℏ}, likewise b with the K_S values.
pub fn evolve_kaon(state: &KaonState, params: &KaonParams, dt: f64) -> Result<KaonState> {
    if !(dt >= 0.0) {
        return Err(invalid(format!("dt must be non-negative, got {dt}")));
    }
    let half = 0.5 * params.delta_m;
    Ok(KaonState {
        a: state.a * decay_factor(params.gamma_l(), half, params.hbar, dt),
        b: state.b * decay_factor(params.gamma_s(), -half, params.hbar, dt),
        t: state.t + dt,
    })
}

/// (I_L, I_S) = (|a|²e^{−Γ_L t}, |b|²e^{−Γ_S t}).
pub fn survival_intensities(state0: &KaonState, params: &KaonParams, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(invalid(format!("t must be non-negative, got {t}")));
    }
    Ok((
        state0.a.norm_sqr() * (-params.gamma_l() * t).exp(),
        state0.b.norm_sqr() * (-params.gamma_s() * t).exp(),
    ))
}

/// Unnormalized (P_K⁰, P_K̄⁰) of the state evolved by `t`.
pub fn strangeness_content(
    state: &KaonState,
    mixing: &MixingParams,
    params: &KaonParams,
    t: f64,
) -> Result<(f64, f64)> {
    if mixing.p.norm_sqr() == 0.0 || mixing.q.norm_sqr() == 0.0 {
        return Err(Error::BasisInversion(format!(
            "p = {} and q = {} make K_L and K_S collinear",
            mixing.p, mixing.q
        )));
    }
    let evolved = evolve_kaon(state, params, t)?;
    let norm = (mixing.p.norm_sqr() + mixing.q.norm_sqr()).sqrt();
    let k0 = (evolved.a + evolved.b) * mixing.p / norm;
    let k0bar = (evolved.b - evolved.a) * mixing.q / norm;
    Ok((k0.norm_sqr(), k0bar.norm_sqr()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    /// Proper decay time in seconds.
    pub t_decay: f64,
    pub component: Component,
    pub channel: Channel,
}

fn pick<R: Rng + ?Sized>(entries: &[(Channel, f64)], rng: &mut R) -> Channel {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(c, f) in entries {
        acc += f;
        if u < acc {
            return c;
        }
    }
    // u landed in the rounding gap above the sum; take the last open channel.
    entries.iter().rev().find(|e| e.1 > 0.0).map_or(entries[0].0, |e| e.0)
}

/// Component with weights |a|², |b|², exponential proper time at that
/// component's width, and a channel from its branching fractions.
pub fn sample_decay<R: Rng + ?Sized>(state0: &KaonState, params: &KaonParams, rng: &mut R) -> DecaySample {
    let wl = state0.a.norm_sqr();
    let wb = state0.b.norm_sqr();
    let component = if rng.random::<f64>() * (wl + wb) < wl { Component::KL } else { Component::KS };
    let gamma = match component {
        Component::KL => params.gamma_l(),
        Component::KS => params.gamma_s(),
    };
    let t_decay = Exp::new(gamma).expect("validated positive width").sample(rng);
    let channel = match component {
        Component::KL => pick(&params.branching_l.entries(), rng),
        Component::KS => pick(&params.branching_s.entries(), rng),
    };
    DecaySample { t_decay, component, channel }
}
