use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{reconstruct_all, AnalysisSetup, Label};
use crate::error::Result;
use crate::event_lab::EventRecord;
use crate::exec::Execution;
use crate::kaon::{Component, KaonParams, KaonState};

pub const TIE_BREAK: &str = "K_L-like iff proper_time > cut * tau_S; proper_time == cut * tau_S is K_S-like";

const HIST_BINS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperTimeHistogram {
    /// Bin edges in units of τ_S.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

/// Summary of one reconstructed run. Counts refer to 2π events unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tie_break: String,
    pub cut_tau_s: f64,
    pub cut_seconds: f64,
    /// All generated kaons in the file.
    pub n_events: u64,
    pub n_two_pi: u64,
    pub n_two_pi_true_ks: u64,
    pub n_two_pi_true_kl: u64,
    pub n_reconstructed: u64,
    /// Rejected as near-parallel.
    pub n_failed: u64,
    pub n_pass: u64,
    pub n_pass_true_ks: u64,
    pub n_pass_true_kl: u64,
    /// Fraction of passing events that truly came from K_S.
    pub contamination: Option<f64>,
    /// N_S(τ>T) / N_L→2π(τ>T) = |b|²e^{−T/τ_S} / (|a|²·BR_2π·e^{−T/τ_L}).
    pub analytic_ratio: Option<f64>,
    pub analytic_contamination: Option<f64>,
    /// √(f(1−f)/n_pass) at the analytic contamination f.
    pub binomial_sigma: Option<f64>,
    pub pull: Option<f64>,
    pub within_3_sigma: Option<bool>,
    /// Instantaneous K_S/K_L→2π decay-rate ratio at the cut,
    /// Γ_S|b|²e^{−T/τ_S} / (Γ_L|a|²·BR_2π·e^{−T/τ_L}).
    pub rate_ratio_at_cut: Option<f64>,
    pub insufficient_statistics: bool,
    pub median_vertex_error_m: Option<f64>,
    pub max_vertex_error_m: Option<f64>,
    pub max_abs_tau_rel_error: Option<f64>,
    pub proper_time_histogram: ProperTimeHistogram,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Reconstruct every 2π event in `records`, apply the cut and compare the
/// K_S contamination with the closed-form expectation for the initial state.
pub fn analyze_run(
    records: &[EventRecord],
    setup: &AnalysisSetup,
    params: &KaonParams,
    initial: &KaonState,
    exec: Execution,
) -> Result<RunReport> {
    setup.validate()?;
    params.validate()?;
    let recos = reconstruct_all(records, setup, params, exec);

    let cut_seconds = setup.cut * params.tau_s;
    let hist_max = 3.0 * setup.cut;
    let edges: Vec<f64> = (0..=HIST_BINS).map(|i| hist_max * i as f64 / HIST_BINS as f64).collect();
    let mut hist = vec![0u64; HIST_BINS];
    let mut overflow = 0u64;

    let mut r = RunReport {
        tie_break: TIE_BREAK.to_owned(),
        cut_tau_s: setup.cut,
        cut_seconds,
        n_events: records.len() as u64,
        n_two_pi: 0,
        n_two_pi_true_ks: 0,
        n_two_pi_true_kl: 0,
        n_reconstructed: 0,
        n_failed: 0,
        n_pass: 0,
        n_pass_true_ks: 0,
        n_pass_true_kl: 0,
        contamination: None,
        analytic_ratio: None,
        analytic_contamination: None,
        binomial_sigma: None,
        pull: None,
        within_3_sigma: None,
        rate_ratio_at_cut: None,
        insufficient_statistics: false,
        median_vertex_error_m: None,
        max_vertex_error_m: None,
        max_abs_tau_rel_error: None,
        proper_time_histogram: ProperTimeHistogram { edges: vec![], counts: vec![], overflow: 0 },
    };
    let mut vertex_errors = Vec::new();
    let mut max_tau_err: f64 = 0.0;

    for (record, reco) in records.iter().zip(&recos) {
        let Some(reco) = reco else { continue };
        r.n_two_pi += 1;
        match record.component {
            Component::KS => r.n_two_pi_true_ks += 1,
            Component::KL => r.n_two_pi_true_kl += 1,
        }
        let reco = match reco {
            Ok(reco) => reco,
            Err(_) => {
                r.n_failed += 1;
                continue;
            }
        };
        r.n_reconstructed += 1;
        vertex_errors.push(reco.vertex_error);
        max_tau_err = max_tau_err.max(reco.tau_rel_error.abs());

        let in_tau_s = reco.proper_time / params.tau_s;
        let bin = (in_tau_s / hist_max * HIST_BINS as f64).floor();
        if bin >= 0.0 && (bin as usize) < HIST_BINS {
            hist[bin as usize] += 1;
        } else {
            overflow += 1;
        }

        if reco.label == Label::KlLike {
            r.n_pass += 1;
            match reco.true_component {
                Component::KS => r.n_pass_true_ks += 1,
                Component::KL => r.n_pass_true_kl += 1,
            }
        }
    }

    r.proper_time_histogram = ProperTimeHistogram { edges, counts: hist, overflow };
    if !vertex_errors.is_empty() {
        vertex_errors.sort_by(f64::total_cmp);
        let n = vertex_errors.len();
        let median = if n % 2 == 1 {
            vertex_errors[n / 2]
        } else {
            0.5 * (vertex_errors[n / 2 - 1] + vertex_errors[n / 2])
        };
        r.median_vertex_error_m = Some(median);
        r.max_vertex_error_m = vertex_errors.last().copied();
        r.max_abs_tau_rel_error = Some(max_tau_err);
    }

    // Closed-form expectation. Each kaon decays as K_S with weight |b|² (every
    // K_S decay is 2π) or as K_L with weight |a|², giving 2π with BR_2π.
    let (wl, ws) = (initial.a.norm_sqr(), initial.b.norm_sqr());
    let s_pass = ws * (-setup.cut).exp();
    let l_pass = wl * params.br_two_pi_l() * (-cut_seconds / params.tau_l).exp();
    r.analytic_ratio = finite(s_pass / l_pass);
    r.rate_ratio_at_cut = finite(params.gamma_s() * s_pass / (params.gamma_l() * l_pass));
    let expected = if s_pass + l_pass > 0.0 { Some(s_pass / (s_pass + l_pass)) } else { None };
    r.analytic_contamination = expected;

    if r.n_pass == 0 {
        r.insufficient_statistics = true;
    } else {
        let f = r.n_pass_true_ks as f64 / r.n_pass as f64;
        r.contamination = Some(f);
        if let Some(fe) = expected {
            let sigma = (fe * (1.0 - fe) / r.n_pass as f64).sqrt();
            r.binomial_sigma = Some(sigma);
            if sigma > 0.0 {
                let pull = (f - fe) / sigma;
                r.pull = Some(pull);
                r.within_3_sigma = Some(pull.abs() <= 3.0);
            } else {
                r.within_3_sigma = Some(f == fe);
            }
        }
    }
    Ok(r)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.6e}"))
}

pub fn render_text_table(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", r.tie_break);
    let rows: Vec<(&str, String)> = vec![
        ("cut [tau_S]", format!("{}", r.cut_tau_s)),
        ("cut [s]", format!("{:.6e}", r.cut_seconds)),
        ("events", r.n_events.to_string()),
        ("2pi events", r.n_two_pi.to_string()),
        ("2pi from K_S (truth)", r.n_two_pi_true_ks.to_string()),
        ("2pi from K_L (truth)", r.n_two_pi_true_kl.to_string()),
        ("reconstructed", r.n_reconstructed.to_string()),
        ("failed (parallel tracks)", r.n_failed.to_string()),
        ("passing cut (K_L-like)", r.n_pass.to_string()),
        ("  of which K_S (truth)", r.n_pass_true_ks.to_string()),
        ("  of which K_L (truth)", r.n_pass_true_kl.to_string()),
        ("K_S contamination (MC)", opt(r.contamination)),
        ("K_S contamination (analytic)", opt(r.analytic_contamination)),
        ("N_S/N_L analytic", opt(r.analytic_ratio)),
        ("rate ratio at cut", opt(r.rate_ratio_at_cut)),
        ("binomial sigma", opt(r.binomial_sigma)),
        ("pull", opt(r.pull)),
        (
            "within 3 sigma",
            r.within_3_sigma.map_or_else(|| "n/a".to_owned(), |b| b.to_string()),
        ),
        ("median vertex error [m]", opt(r.median_vertex_error_m)),
        ("max |tau rel error|", opt(r.max_abs_tau_rel_error)),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    if r.insufficient_statistics {
        let _ = writeln!(s, "WARNING: no events pass the cut; insufficient statistics");
    }
    s
}

/// Histogram of reconstructed proper times (log-scaled counts) with the cut
/// marked.
pub fn render_svg_histogram(r: &RunReport) -> String {
    let h = &r.proper_time_histogram;
    let (w, ht, pad) = (640.0, 360.0, 40.0);
    let n = h.counts.len().max(1);
    let max = h.counts.iter().map(|&c| ((c + 1) as f64).ln()).fold(0.0, f64::max).max(1e-9);
    let x_max = h.edges.last().copied().unwrap_or(1.0);
    let bar_w = (w - 2.0 * pad) / n as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{ht}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{ht}" fill="white"/>"#);
    for (i, &c) in h.counts.iter().enumerate() {
        let bh = ((c + 1) as f64).ln() / max * (ht - 2.0 * pad);
        let x = pad + i as f64 * bar_w;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="steelblue"/>"#,
            ht - pad - bh,
            bar_w * 0.9
        );
    }
    let cx = pad + r.cut_tau_s / x_max * (w - 2.0 * pad);
    let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{pad}" x2="{cx:.2}" y2="{}" stroke="red" stroke-width="2"/>"#, ht - pad);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-size="12">reconstructed proper time [tau_S], cut = {}</text>"#, pad, ht - 10.0, r.cut_tau_s);
    s.push_str("</svg>\n");
    s
}
