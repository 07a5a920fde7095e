//! Run configuration and the four batch commands.
//!
//! A config is TOML (or JSON when the file ends in `.json`) with one table
//! per section. Unknown keys are rejected. Every random draw is derived from
//! `run.seed` through named substreams, so a run is reproducible from the
//! config file and the seed alone, whatever the worker count.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bohmian::{
    equivariance_check, first_crossing, propagate_trajectory, sample_equilibrium_ensemble,
    write_trajectories_csv, EnsembleSpec, EquivarianceReport, WavefunctionHistory, DEFAULT_SUBSTEPS,
};
use crate::error::{Error, Result};
use crate::event_lab::{
    generate_events, read_events_jsonl, smear_measurement, write_events_csv, write_events_jsonl, BeamSpec,
    DetectorSpec, EventRecord,
};
use crate::exec::Execution;
use crate::kaon::{KLBranching, KSBranching, KaonParams};
use crate::quantum::{
    evolve, evolve_history, init_gaussian_packet, mean_position, rms_width, write_csv, EvolveOptions, Grid1D,
    Potential, QuantumParticle, Wavefunction,
};
use crate::reconstruction::{analyze_run, render_svg_histogram, render_text_table, AnalysisSetup, RunReport};
use crate::spreading::{self, error_budget, Frame, PacketSpec, SpreadingReport, DEFAULT_DISTANCES};
use crate::units::PhysicalConstants;
use crate::VERSION;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Required, either here or on the command line.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Kaon parameters; ℏ and c come from `[units]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KaonSection {
    pub m_k: f64,
    pub delta_m: f64,
    pub tau_l: f64,
    pub tau_s: f64,
    pub m_pi_charged: f64,
    pub m_pi_neutral: f64,
    pub branching_l: KLBranching,
    pub branching_s: KSBranching,
}

impl Default for KaonSection {
    fn default() -> Self {
        let p = KaonParams::default();
        KaonSection {
            m_k: p.m_k,
            delta_m: p.delta_m,
            tau_l: p.tau_l,
            tau_s: p.tau_s,
            m_pi_charged: p.m_pi_charged,
            m_pi_neutral: p.m_pi_neutral,
            branching_l: p.branching_l,
            branching_s: p.branching_s,
        }
    }
}

impl KaonSection {
    pub fn params(&self, units: &PhysicalConstants) -> Result<KaonParams> {
        let p = KaonParams {
            m_k: self.m_k,
            delta_m: self.delta_m,
            tau_l: self.tau_l,
            tau_s: self.tau_s,
            m_pi_charged: self.m_pi_charged,
            m_pi_neutral: self.m_pi_neutral,
            hbar: units.hbar,
            c: units.c,
            branching_l: self.branching_l,
            branching_s: self.branching_s,
        };
        p.validate()?;
        Ok(p)
    }
}

fn default_direction() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub n_events: usize,
    /// MeV/c.
    pub momentum: f64,
    #[serde(default)]
    pub momentum_spread: f64,
    /// Metres.
    #[serde(default)]
    pub source: [f64; 3],
    /// Normalized on load.
    #[serde(default = "default_direction")]
    pub direction: [f64; 3],
    /// K_L amplitude as [re, im].
    pub a: [f64; 2],
    /// K_S amplitude as [re, im].
    pub b: [f64; 2],
}

impl BeamSection {
    pub fn spec(&self) -> Result<BeamSpec> {
        let d = Vector3::from(self.direction);
        if !(d.norm() > 0.0) {
            return Err(config_err("beam.direction must be non-zero"));
        }
        let mut beam = BeamSpec::new(
            Vector3::from(self.source),
            d.normalize(),
            self.momentum,
            Complex64::new(self.a[0], self.a[1]),
            Complex64::new(self.b[0], self.b[1]),
        )?;
        beam.momentum_spread = self.momentum_spread;
        beam.validate()?;
        Ok(beam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub relative_momentum_resolution: f64,
    /// Radians.
    pub angular_resolution: f64,
}

fn default_cut() -> f64 {
    10.0
}

fn default_parallel_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSection {
    /// In units of τ_S.
    #[serde(default = "default_cut")]
    pub cut: f64,
    /// Metres from the vertex to the measured hit on each track.
    pub lever_arm: f64,
    /// Radians.
    #[serde(default = "default_parallel_tolerance")]
    pub parallel_tolerance: f64,
    #[serde(default)]
    pub svg: bool,
}

fn default_distances() -> Vec<f64> {
    DEFAULT_DISTANCES.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadingSection {
    /// Metres.
    pub sigma0: f64,
    /// MeV; defaults to the charged-pion mass.
    pub mass: Option<f64>,
    /// MeV/c.
    pub momentum: f64,
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PotentialSection {
    #[default]
    Free,
    Harmonic { spring: f64, center: f64 },
}

fn one() -> f64 {
    1.0
}

/// Natural-unit 1D problem shared by `evolve` and `trajectories`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub center: f64,
    pub sigma0: f64,
    #[serde(default)]
    pub k0: f64,
    pub dt: f64,
    #[serde(default)]
    pub potential: PotentialSection,
    /// Times written by `evolve`; each must be a multiple of `dt`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl QuantumSection {
    fn setup(&self) -> Result<(Wavefunction, Potential, QuantumParticle)> {
        let grid = Grid1D::new(self.x_min, self.x_max, self.n_points)?;
        let particle = QuantumParticle::new(self.mass, self.hbar)?;
        let potential = match self.potential {
            PotentialSection::Free => Potential::zero(&grid),
            PotentialSection::Harmonic { spring, center } => Potential::harmonic(&grid, spring, center)?,
        };
        let wf = init_gaussian_packet(grid, self.center, self.sigma0, self.k0)?;
        Ok((wf, potential, particle))
    }

    fn steps_for(&self, t: f64) -> Result<usize> {
        if !(self.dt > 0.0) {
            return Err(config_err(format!("quantum.dt must be positive, got {}", self.dt)));
        }
        let n = (t / self.dt).round();
        if !(t >= 0.0) || (n * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(config_err(format!("time {t} is not a non-negative multiple of quantum.dt = {}", self.dt)));
        }
        Ok(n as usize)
    }
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

fn default_written() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesSection {
    pub n_particles: usize,
    /// Multiple of `quantum.dt`.
    pub t_final: f64,
    /// Solver steps between stored snapshots.
    #[serde(default = "one_usize")]
    pub history_stride: usize,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Trajectories written to CSV, ordered by starting position.
    #[serde(default = "default_written")]
    pub n_written: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub units: PhysicalConstants,
    #[serde(default)]
    pub kaon: KaonSection,
    pub beam: Option<BeamSection>,
    pub detector: Option<DetectorSection>,
    pub reconstruction: Option<ReconstructionSection>,
    pub spreading: Option<SpreadingSection>,
    pub quantum: Option<QuantumSection>,
    pub trajectories: Option<TrajectoriesSection>,
}

fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section.as_ref().ok_or_else(|| config_err(format!("missing section [{name}]")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// JSON if the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    /// Apply a command-line seed and check that one is set.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Self> {
        if seed.is_some() {
            self.run.seed = seed;
        }
        if self.run.seed.is_none() {
            return Err(config_err("missing key run.seed (set it in [run] or pass --seed)"));
        }
        self.units.validate()?;
        Ok(self)
    }

    pub fn seed(&self) -> Result<u64> {
        self.run.seed.ok_or_else(|| config_err("missing key run.seed"))
    }

    pub fn kaon_params(&self) -> Result<KaonParams> {
        self.kaon.params(&self.units)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

/// Report envelope: tool version, the resolved config and the result.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub result: T,
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(&path)?)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, config: &RunConfig, result: T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, &Envelope { version: VERSION, config, result })?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Config as `#`-prefixed lines for text reports.
fn config_header(config: &RunConfig) -> String {
    let mut s = format!("# {VERSION}\n");
    for line in config.to_toml().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotInfo {
    pub file: String,
    pub time: f64,
    pub norm: f64,
    pub mean_position: f64,
    pub rms_width: f64,
}

/// Write ψ at each `quantum.snapshot_times` as CSV plus a JSON summary.
pub fn cmd_evolve(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let q = require(&config.quantum, "quantum")?;
    if q.snapshot_times.is_empty() {
        return Err(config_err("quantum.snapshot_times is empty"));
    }
    if q.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("quantum.snapshot_times must be strictly ascending"));
    }
    let (mut wf, potential, particle) = q.setup()?;
    fs::create_dir_all(out)?;
    let options = EvolveOptions::default();
    let norm0 = wf.norm();
    let mut step = 0usize;
    let mut files = Vec::new();
    let mut infos = Vec::new();
    for (k, &t) in q.snapshot_times.iter().enumerate() {
        let target = q.steps_for(t)?;
        if target > step {
            wf = evolve(&wf, &potential, &particle, q.dt, target - step, &options)?;
            step = target;
        }
        let name = format!("snapshot_{k:03}.csv");
        let (path, mut w) = create(out, &name)?;
        write_csv(&wf, &particle, &mut w)?;
        w.flush()?;
        files.push(path);
        infos.push(SnapshotInfo {
            file: name,
            time: wf.time,
            norm: wf.norm(),
            mean_position: mean_position(&wf),
            rms_width: rms_width(&wf),
        });
    }
    #[derive(Serialize)]
    struct Summary {
        initial_norm: f64,
        max_norm_drift: f64,
        snapshots: Vec<SnapshotInfo>,
    }
    let max_norm_drift = infos.iter().map(|s| (s.norm - norm0).abs() / norm0).fold(0.0, f64::max);
    files.push(write_json(out, "evolve_summary.json", config, Summary { initial_norm: norm0, max_norm_drift, snapshots: infos })?);
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub equivariance: EquivarianceReport,
    pub n_written: usize,
    pub written_failures: usize,
    pub no_crossing: bool,
    pub first_crossing: Option<(usize, usize)>,
}

/// Bohmian ensemble on the configured packet: trajectories CSV for an ordered
/// subset and an equivariance summary for the whole ensemble.
pub fn cmd_trajectories(config: &RunConfig, out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let q = require(&config.quantum, "quantum")?;
    let tr = require(&config.trajectories, "trajectories")?;
    let seed = config.seed()?;
    let (wf, potential, particle) = q.setup()?;
    let n_steps = q.steps_for(tr.t_final)?;
    let snaps = evolve_history(&wf, &potential, &particle, q.dt, n_steps, tr.history_stride, &EvolveOptions::default())?;
    let history = WavefunctionHistory::new(snaps, particle)?;

    let equivariance = equivariance_check(&history, &EnsembleSpec::equilibrium(tr.n_particles, seed), tr.substeps, exec)?;

    let written = tr.n_written.min(tr.n_particles);
    let mut starts = if written > 0 {
        sample_equilibrium_ensemble(history.first(), &EnsembleSpec::equilibrium(written, seed), exec)?
    } else {
        Vec::new()
    };
    starts.sort_by(f64::total_cmp);
    let results = exec.map_slice(&starts, |_, &x0| propagate_trajectory(&history, x0, tr.substeps));
    let trajectories: Vec<_> = results.into_iter().filter_map(|r| r.ok()).collect();
    let written_failures = written - trajectories.len();
    let crossing = first_crossing(&trajectories);

    fs::create_dir_all(out)?;
    let (path, mut w) = create(out, "trajectories.csv")?;
    write_trajectories_csv(trajectories.iter().enumerate(), &mut w)?;
    w.flush()?;
    let summary = TrajectorySummary {
        equivariance,
        n_written: trajectories.len(),
        written_failures,
        no_crossing: crossing.is_none(),
        first_crossing: crossing,
    };
    let json = write_json(out, "ensemble_summary.json", config, summary)?;
    Ok(vec![path, json])
}

/// Generate and smear events from the resolved config.
pub fn simulate_events(config: &RunConfig, exec: Execution) -> Result<Vec<EventRecord>> {
    let beam_cfg = require(&config.beam, "beam")?;
    let det_cfg = require(&config.detector, "detector")?;
    let params = config.kaon_params()?;
    let beam = beam_cfg.spec()?;
    let seed = config.seed()?;
    let det = DetectorSpec {
        relative_momentum_resolution: det_cfg.relative_momentum_resolution,
        angular_resolution: det_cfg.angular_resolution,
        seed,
    };
    det.validate()?;
    let events = generate_events(&beam, &params, seed, beam_cfg.n_events, exec);
    Ok(exec.map_slice(&events, |_, e| EventRecord::new(e, smear_measurement(e, &det))))
}

pub fn analysis_setup(config: &RunConfig) -> Result<AnalysisSetup> {
    let beam = require(&config.beam, "beam")?;
    let reco = require(&config.reconstruction, "reconstruction")?;
    let setup = AnalysisSetup {
        source: beam.source,
        lever_arm: reco.lever_arm,
        cut: reco.cut,
        parallel_tolerance: reco.parallel_tolerance,
    };
    setup.validate()?;
    Ok(setup)
}

/// Analyse an event file produced by `experiment`.
pub fn analyze_events_file(config: &RunConfig, events: &Path, exec: Execution) -> Result<RunReport> {
    let records = read_events_jsonl(BufReader::new(File::open(events)?))?;
    let beam = require(&config.beam, "beam")?.spec()?;
    analyze_run(&records, &analysis_setup(config)?, &config.kaon_params()?, &beam.initial_state(), exec)
}

/// Events (JSONL and CSV), then the reconstruction report (JSON, text and
/// optionally SVG).
pub fn cmd_experiment(config: &RunConfig, out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let setup = analysis_setup(config)?;
    let reco_cfg = require(&config.reconstruction, "reconstruction")?;
    let params = config.kaon_params()?;
    let beam = require(&config.beam, "beam")?.spec()?;
    let records = simulate_events(config, exec)?;

    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let (path, mut w) = create(out, "events.jsonl")?;
    write_events_jsonl(&records, &mut w)?;
    w.flush()?;
    files.push(path);
    let (path, mut w) = create(out, "events.csv")?;
    write_events_csv(&records, &mut w)?;
    w.flush()?;
    files.push(path);

    let report = analyze_run(&records, &setup, &params, &beam.initial_state(), exec)?;
    let text = format!("{}{}", config_header(config), render_text_table(&report));
    files.push(write_text(out, "run_report.txt", &text)?);
    if reco_cfg.svg {
        files.push(write_text(out, "proper_time.svg", &render_svg_histogram(&report))?);
    }
    files.push(write_json(out, "run_report.json", config, report)?);
    Ok(files)
}

pub fn spreading_report(config: &RunConfig, exec: Execution) -> Result<SpreadingReport> {
    let s = require(&config.spreading, "spreading")?;
    let beam = require(&config.beam, "beam")?.spec()?;
    let params = config.kaon_params()?;
    let packet = PacketSpec { sigma0: s.sigma0, mass: s.mass.unwrap_or(params.m_pi_charged), momentum: s.momentum };
    error_budget(&packet, &s.distances, &beam, &params, s.frame, exec)
}

/// Spreading error budget as CSV, text, JSON and optionally SVG.
pub fn cmd_spreading(config: &RunConfig, out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let svg = require(&config.spreading, "spreading")?.svg;
    let report = spreading_report(config, exec)?;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let (path, mut w) = create(out, "spreading_report.csv")?;
    spreading::write_report_csv(&report, &mut w)?;
    w.flush()?;
    files.push(path);
    let text = format!("{}{}", config_header(config), spreading::render_text_table(&report));
    files.push(write_text(out, "spreading_report.txt", &text)?);
    if svg {
        files.push(write_text(out, "spreading.svg", &spreading::render_svg(&report))?);
    }
    files.push(write_json(out, "spreading_report.json", config, report)?);
    Ok(files)
}
