use kaonlab_core::event_lab::{generate_events, smear_measurement, BeamSpec, DecayEvent, DetectorSpec, EventRecord};
use kaonlab_core::kaon::KaonParams;
use kaonlab_core::reconstruction::{analyze_run, AnalysisSetup, RunReport};
use kaonlab_core::Execution;
use num_complex::Complex64;

fn beam() -> BeamSpec {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    BeamSpec::along_z(10_000.0, amp, amp).unwrap()
}

fn setup(cut: f64) -> AnalysisSetup {
    AnalysisSetup { source: [0.0; 3], lever_arm: 1.0, cut, parallel_tolerance: 1e-9 }
}

fn analyze(events: &[DecayEvent], det: &DetectorSpec, cut: f64) -> RunReport {
    let records = Execution::Parallel.map_slice(events, |_, e| EventRecord::new(e, smear_measurement(e, det)));
    analyze_run(&records, &setup(cut), &KaonParams::default(), &beam().initial_state(), Execution::Parallel).unwrap()
}

#[test]
fn vertex_error_grows_with_angular_resolution() {
    let events = generate_events(&beam(), &KaonParams::default(), 13, 50_000, Execution::Parallel);
    let medians: Vec<f64> = [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
        .iter()
        .map(|&a| {
            let det = DetectorSpec { relative_momentum_resolution: 0.01, angular_resolution: a, seed: 5 };
            analyze(&events, &det, 10.0).median_vertex_error_m.unwrap()
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
    assert!(medians[0] < 1e-9);
}

#[test]
fn contamination_matches_closed_form_at_several_cuts() {
    let events = generate_events(&beam(), &KaonParams::default(), 14, 1_000_000, Execution::Parallel);
    let det = DetectorSpec { relative_momentum_resolution: 0.01, angular_resolution: 1e-3, seed: 6 };
    for cut in [5.0, 8.0, 10.0, 12.0] {
        let r = analyze(&events, &det, cut);
        assert!(!r.insufficient_statistics);
        assert_eq!(r.within_3_sigma, Some(true), "cut {cut}: {:?} vs {:?}, pull {:?}", r.contamination, r.analytic_contamination, r.pull);
    }
}

#[test]
fn perfect_detector_contamination_is_exact_in_expectation() {
    // Without smearing only the decay statistics fluctuate.
    let events = generate_events(&beam(), &KaonParams::default(), 15, 1_000_000, Execution::Parallel);
    let r = analyze(&events, &DetectorSpec::perfect(1), 6.0);
    assert!(r.pull.unwrap().abs() < 3.0, "{:?}", r.pull);
    assert_eq!(r.n_pass, r.n_pass_true_ks + r.n_pass_true_kl);
}
