//! Acceptance gate: every criterion runs at its stated size and tolerance and
//! prints one PASS/FAIL line. The process exits non-zero if any fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kaonlab_core::bohmian::{
    equivariance_check, first_crossing, plane_wave_velocity, propagate_trajectory, sample_equilibrium_ensemble,
    EnsembleSpec, WavefunctionHistory,
};
use kaonlab_core::event_lab::{generate_events, smear_measurement, BeamSpec, DetectorSpec, EventRecord};
use kaonlab_core::kaon::{overlap, sample_decay, Channel, Component, KaonParams, KaonState, MixingParams};
use kaonlab_core::pipeline::{cmd_experiment, RunConfig};
use kaonlab_core::quantum::{evolve_history, init_gaussian_packet, EvolveOptions, Grid1D, Potential, QuantumParticle};
use kaonlab_core::reconstruction::{analyze_run, AnalysisSetup};
use kaonlab_core::rng::substream;
use kaonlab_core::spreading::{
    analytic_sigma, default_grid, error_budget, numerical_sigma, Frame, PacketSpec, DEFAULT_DISTANCES, SIGNAL_SCALE,
};
use kaonlab_core::{Execution, PhysicalConstants};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn gaussian_history(n_steps: usize, stride: usize) -> WavefunctionHistory {
    let grid = Grid1D::new(-15.0, 15.0, 1201).unwrap();
    let particle = QuantumParticle::natural();
    let wf = init_gaussian_packet(grid, 0.0, 1.0, 0.0).unwrap();
    let snaps = evolve_history(&wf, &Potential::zero(&grid), &particle, 0.002, n_steps, stride, &EvolveOptions::default())
        .unwrap();
    WavefunctionHistory::new(snaps, particle).unwrap()
}

fn unitarity() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::new(-15.0, 15.0, 1201).unwrap();
    let particle = QuantumParticle::natural();
    let wf = init_gaussian_packet(grid, 0.0, 1.0, 0.0).unwrap();
    let snaps =
        evolve_history(&wf, &Potential::zero(&grid), &particle, 0.002, 1000, 1, &EvolveOptions::default()).unwrap();
    let norm0 = wf.norm();
    let drift = snaps.iter().map(|s| (s.norm() - norm0).abs()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        drift <= 1e-8 && elapsed < Duration::from_secs(10),
        format!("max norm drift {drift:.2e} over 1000 steps (limit 1e-8), {:.2} s (limit 10 s)", secs(elapsed)),
    )
}

fn plane_wave_linearity() -> Outcome {
    let grid = Grid1D::new(-50.0, 50.0, 2001).unwrap();
    let range = grid.x_max() - grid.x_min();
    let mut worst: f64 = 0.0;
    for (k, hbar, mass) in [(1.0, 1.0, 1.0), (-2.5, 1.0, 1.0), (0.3, 2.0, 0.5)] {
        let particle = QuantumParticle::new(mass, hbar).unwrap();
        let v = plane_wave_velocity(k, &particle).unwrap();
        let t_total = 0.2 * range / v.abs();
        let n = 400;
        let history = WavefunctionHistory::plane_wave(grid, k, particle, t_total / n as f64, n).unwrap();
        for x0 in [-30.0, -12.3, 0.0, 7.7, 30.0] {
            let x0 = x0 - v.signum() * 0.1 * range;
            let traj = propagate_trajectory(&history, x0, 4).map_err(|f| f.error.to_string())?;
            for &(t, x) in &traj.samples {
                worst = worst.max((x - x0 - v * t).abs() / range);
            }
        }
    }
    check(worst <= 1e-10, format!("max |x − x0 − (ℏk/m)t| / range = {worst:.2e} (limit 1e-10)"))
}

fn equivariance() -> Outcome {
    let start = Instant::now();
    let history = gaussian_history(1000, 10);
    let report = equivariance_check(&history, &EnsembleSpec::equilibrium(100_000, 2024), 4, Execution::Parallel)
        .map_err(|e| e.to_string())?;

    let mut starts =
        sample_equilibrium_ensemble(history.first(), &EnsembleSpec::equilibrium(1000, 7), Execution::Parallel)
            .map_err(|e| e.to_string())?;
    starts.sort_by(f64::total_cmp);
    let trajectories = Execution::Parallel.map_slice(&starts, |_, &x| propagate_trajectory(&history, x, 4));
    let failed = trajectories.iter().filter(|t| t.is_err()).count();
    let ok: Vec<_> = trajectories.into_iter().filter_map(|t| t.ok()).collect();
    let crossing = first_crossing(&ok);
    let elapsed = start.elapsed();
    check(
        report.valid
            && report.l1_distance <= 0.05
            && crossing.is_none()
            && failed == 0
            && elapsed < Duration::from_secs(120),
        format!(
            "L1 = {:.4} (limit 0.05, sampling floor {:.4}) at t = {}, {} failures; 1000 ordered trajectories: crossing {:?}, {} failed; {:.1} s (limit 120 s)",
            report.l1_distance,
            report.statistical_l1,
            report.final_time,
            report.failures,
            crossing,
            failed,
            secs(elapsed)
        ),
    )
}

fn overlap_properties() -> Outcome {
    let mut rng = substream(4, 0, 0);
    let sym = |rng: &mut kaonlab_core::rng::StreamRng| 20.0 * rng.random::<f64>() - 10.0;
    let n = 10_000;
    let mut failures = Vec::new();
    for i in 0..n {
        let p = Complex64::new(sym(&mut rng), sym(&mut rng));
        let q = Complex64::new(sym(&mut rng), sym(&mut rng));
        let lambda = Complex64::new(sym(&mut rng), sym(&mut rng));
        let m = MixingParams::new(p, q).map_err(|e| e.to_string())?;
        let o = overlap(&m).map_err(|e| e.to_string())?;
        let scaled = overlap(&MixingParams::new(p * lambda, q * lambda).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        // Same modulus, random phase.
        let phase = Complex64::from_polar(1.0, 6.283 * rng.random::<f64>());
        let balanced = overlap(&MixingParams::new(p, p.norm() * phase).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let moduli_differ = (p.norm() - q.norm()).abs() > 1e-9 * (p.norm() + q.norm());
        if (scaled - o).abs() > 1e-12 || o.abs() > 1.0 || balanced.abs() > 1e-15 || (moduli_differ && o == 0.0) {
            failures.push(i);
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{n} random (p, q): scale invariance, |overlap| ≤ 1, zero iff |p| = |q|; {} violations",
            failures.len()
        ),
    )
}

fn lifetime_scale() -> Outcome {
    let params = KaonParams::default();
    let beam = BeamSpec::along_z(10_000.0, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
    let n = 100_000;
    let events = generate_events(&beam, &params, 31, n, Execution::Parallel);
    let mean = events.iter().map(|e| e.true_proper_time).sum::<f64>() / n as f64;
    let tol = 3.0 * params.tau_s / (n as f64).sqrt();
    check(
        (mean - 1e-10).abs() <= tol && events.iter().all(|e| e.component == Component::KS),
        format!("pure K_S mean proper time {mean:.4e} s vs 1e-10 s, |Δ| = {:.2e} (limit {tol:.2e})", (mean - 1e-10).abs()),
    )
}

fn branching_ratios() -> Outcome {
    let params = KaonParams::default();
    let n = 1_000_000usize;
    let mut lines = Vec::new();
    let mut ok = true;
    let configured: [(Component, Vec<(Channel, f64)>); 2] = [
        (Component::KL, params.branching_l.entries().to_vec()),
        (Component::KS, params.branching_s.entries().to_vec()),
    ];
    for (component, entries) in configured {
        let state = KaonState::pure(component);
        let channels = Execution::Parallel.map_range(n, |i| {
            let mut rng = substream(55, component as u64, i as u64);
            sample_decay(&state, &params, &mut rng).channel
        });
        for (channel, br) in entries {
            let count = channels.iter().filter(|&&c| c == channel).count();
            let f = count as f64 / n as f64;
            let sigma = (br * (1.0 - br) / n as f64).sqrt();
            let pull = (f - br) / sigma;
            ok &= pull.abs() <= 3.0;
            lines.push(format!("{channel:?} {f:.5}/{br} ({pull:+.2}σ)"));
        }
    }
    check(ok, format!("n = 10^6 per component: {}", lines.join(", ")))
}

fn reconstruction_round_trip() -> Outcome {
    let start = Instant::now();
    let params = KaonParams::default();
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let beam = BeamSpec::along_z(10_000.0, amp, amp).unwrap();
    let setup = AnalysisSetup { source: [0.0; 3], lever_arm: 1.0, cut: 10.0, parallel_tolerance: 1e-9 };

    // Zero smearing: 10⁴ reconstructed 2π events.
    let perfect = DetectorSpec::perfect(1);
    let records: Vec<EventRecord> = generate_events(&beam, &params, 8, 30_000, Execution::Parallel)
        .iter()
        .filter(|e| e.daughters.is_some())
        .take(10_000)
        .map(|e| EventRecord::new(e, smear_measurement(e, &perfect)))
        .collect();
    let exact = analyze_run(&records, &setup, &params, &beam.initial_state(), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let vertex_err = exact.max_vertex_error_m.unwrap_or(f64::INFINITY);
    let tau_err = exact.max_abs_tau_rel_error.unwrap_or(f64::INFINITY);
    let round_trip_ok = exact.n_reconstructed == 10_000 && vertex_err <= 1e-9 && tau_err <= 1e-9;

    // 1% momentum and 1 mrad angular smearing, 10⁶ generated kaons.
    let det = DetectorSpec { relative_momentum_resolution: 0.01, angular_resolution: 1e-3, seed: 9 };
    let events = generate_events(&beam, &params, 10, 1_000_000, Execution::Parallel);
    let smeared = Execution::Parallel.map_slice(&events, |_, e| EventRecord::new(e, smear_measurement(e, &det)));
    let report = analyze_run(&smeared, &setup, &params, &beam.initial_state(), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let contamination_ok = report.within_3_sigma == Some(true);
    check(
        round_trip_ok && contamination_ok && elapsed < Duration::from_secs(300),
        format!(
            "unsmeared: {} events, max vertex error {vertex_err:.1e} m, max |Δτ/τ| {tau_err:.1e} (limit 1e-9); \
             smeared: {} pass the 10τ_S cut, contamination {:.4} vs analytic {:.4} ± {:.4} (pull {:+.2}); {:.1} s (limit 300 s)",
            exact.n_reconstructed,
            report.n_pass,
            report.contamination.unwrap_or(f64::NAN),
            report.analytic_contamination.unwrap_or(f64::NAN),
            report.binomial_sigma.unwrap_or(f64::NAN),
            report.pull.unwrap_or(f64::NAN),
            secs(elapsed)
        ),
    )
}

fn spreading_oracle() -> Outcome {
    let natural = PhysicalConstants::natural();
    let mut worst: f64 = 0.0;
    for (sigma0, t) in [(1.0, 2.0), (0.5, 0.5), (2.0, 10.0)] {
        let packet = PacketSpec { sigma0, mass: 1.0, momentum: 0.0 };
        let grid = default_grid(&packet, t, &natural).map_err(|e| e.to_string())?;
        let num = numerical_sigma(&packet, t, &grid, &natural).map_err(|e| e.to_string())?;
        worst = worst.max((num / analytic_sigma(&packet, t, &natural) - 1.0).abs());
    }
    let params = KaonParams::default();
    let beam = BeamSpec::along_z(10_000.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
    let pion = PacketSpec { sigma0: 1e-10, mass: params.m_pi_charged, momentum: 200.0 };
    let report = error_budget(&pion, &DEFAULT_DISTANCES, &beam, &params, Frame::RestFrame, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let last = report.rows.last().ok_or("empty report")?;
    let table_ok = last.flight_distance == 10.0
        && report.signal_scale == SIGNAL_SCALE
        && report.rows.iter().all(|r| r.ratio_to_signal == r.relative_tau_error / SIGNAL_SCALE && r.sigma_t >= pion.sigma0);
    check(
        worst < 0.01 && table_ok,
        format!(
            "numerical vs analytic σ(t) worst {:.3}% over 3 (σ₀, t) (limit 1%); 10 m row: σ_T = {:.3e} m, δτ/τ = {:.3e} = {:.2e} × 1e-3",
            100.0 * worst,
            last.sigma_t,
            last.relative_tau_error,
            last.ratio_to_signal
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
[run]
seed = 4242

[beam]
n_events = 50000
momentum = 10000.0
a = [0.70710678118654752, 0.0]
b = [0.0, 0.70710678118654752]

[detector]
relative_momentum_resolution = 0.01
angular_resolution = 0.001

[reconstruction]
lever_arm = 1.0
svg = true
"#;

fn determinism() -> Outcome {
    let config = RunConfig::from_toml(DETERMINISM_CONFIG).and_then(|c| c.resolve(None)).map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let a = cmd_experiment(&config, dirs[0].path(), Execution::Parallel).map_err(|e| e.to_string())?;
    let b = cmd_experiment(&config, dirs[1].path(), Execution::Sequential).map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for (fa, fb) in a.iter().zip(&b) {
        if fs::read(fa).map_err(|e| e.to_string())? != fs::read(fb).map_err(|e| e.to_string())? {
            differing.push(fa.file_name().unwrap_or_default().to_string_lossy().into_owned());
        }
    }
    let names: Vec<_> = a.iter().map(|f| f.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect();
    check(
        a.len() == b.len() && differing.is_empty(),
        format!("two runs (parallel, sequential) of experiment: {} identical, differing {:?}", names.join(", "), differing),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("unitarity", unitarity),
        ("plane-wave linearity", plane_wave_linearity),
        ("equivariance", equivariance),
        ("overlap formula", overlap_properties),
        ("lifetime scale", lifetime_scale),
        ("branching ratios", branching_ratios),
        ("reconstruction round trip", reconstruction_round_trip),
        ("spreading oracle", spreading_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
