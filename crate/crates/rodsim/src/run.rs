//! Job execution and output files.
//!
//! [`prepare`] turns a scenario into a [`Plan`] of solver objects and is the
//! whole validation step. [`execute`] runs the plan and writes
//!
//! * `<prefix>.csv`, the time series (or load-step series of a static job),
//! * `<prefix>_meta.json`, the echoed canonical scenario, version, status,
//!   failure record and a job summary,
//! * job tables: `_alpha.csv`, `_spectrum.csv`, `_qii.csv`, `_det.csv`,
//!   `_convergence.csv`, `_sweep.csv` and per-frequency `_f<n>.csv`.
//!
//! Floating-point columns are written with 17 significant digits. Reruns of
//! a scenario give byte-identical CSV files; the only varying metadata field
//! is `created_unix`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodsim_core::assembly::Discretization;
use rodsim_core::diagnostics::{
    error_norms, linear_beam_det_probe, max_step_drift, relative_l2_difference, steady_state_stats, BeamSection,
    ErrorNorms,
};
use rodsim_core::dynamics::{run_with, DynamicProblem, RodState, Termination, Trajectory};
use rodsim_core::forces::{FrequencyConvention, LoadCase};
use rodsim_core::kinematics::MaterialParams;
use rodsim_core::pendulum::{pendulum_precision_quotient, pendulum_run, PendulumParams, PendulumWind};
use rodsim_core::statics::{solve_static, StaticProblem, StaticStep};
use rodsim_core::{DVec, Vec3};
use serde::Serialize;
use serde_json::{json, Value};

use crate::compile::{self, CircleReference};
use crate::scenario::*;
use crate::spectrum::spectrum;
use crate::workers::parallel_map;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Solver objects of a validated scenario.
#[derive(Debug, Clone)]
pub enum Plan {
    Static {
        disc: Discretization,
        material: MaterialParams,
        loads: Vec<LoadCase>,
    },
    Dynamic {
        problem: DynamicProblem,
        initial: RodState,
        alphas: Vec<f64>,
    },
    Pendulum {
        params: PendulumParams,
        wind: Option<PendulumWind>,
    },
    DetProbe {
        section: BeamSection,
    },
    Convergence {
        discs: Vec<Discretization>,
        material: MaterialParams,
        loads: Vec<LoadCase>,
        reference: CircleReference,
    },
    FrequencySweep {
        /// One problem per driving frequency.
        problems: Vec<DynamicProblem>,
        /// Excitation period of each problem.
        periods: Vec<f64>,
    },
}

/// Builds every solver object of `s`; fails without side effects.
pub fn prepare(s: &Scenario) -> Result<Plan, ScenarioError> {
    match s.job {
        JobKind::Static => {
            let rod = s.rod.as_ref().expect("rod section");
            Ok(Plan::Static {
                disc: compile::discretization(rod, rod.elements)?,
                material: compile::material(&rod.section, rod.alpha, "rod")?,
                loads: compile::loads(&s.loads, rod.length)?,
            })
        }
        JobKind::Dynamic => {
            let problem = dynamic_problem(s, None)?;
            let d = s.dynamics.as_ref().expect("dynamics section");
            let mut initial = RodState::at_rest(&problem.disc);
            if d.initial_velocity_noise > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let a = d.initial_velocity_noise;
                initial.qdot_red.iter_mut().for_each(|v| *v = rng.gen_range(-a..=a));
            }
            for &a in &d.alpha_sweep {
                problem.material.with_alpha(a).map_err(|e| ScenarioError::semantic("dynamics.alpha_sweep", e.to_string()))?;
            }
            Ok(Plan::Dynamic { problem, initial, alphas: d.alpha_sweep.clone() })
        }
        JobKind::Pendulum => {
            let (params, wind) = compile::pendulum(s.pendulum.as_ref().expect("pendulum section"), s.time.as_ref().expect("time"))?;
            Ok(Plan::Pendulum { params, wind })
        }
        JobKind::DetProbe => Ok(Plan::DetProbe { section: compile::beam_section(s.probe.as_ref().expect("probe section"))? }),
        JobKind::ConvergenceSweep => {
            let rod = s.rod.as_ref().expect("rod section");
            let material = compile::material(&rod.section, rod.alpha, "rod")?;
            let c = s.convergence.as_ref().expect("convergence section");
            let discs = c.elements.iter().map(|&ne| compile::discretization(rod, ne)).collect::<Result<_, _>>()?;
            Ok(Plan::Convergence {
                discs,
                material,
                loads: compile::loads(&s.loads, rod.length)?,
                reference: compile::circle_reference(rod, &s.loads, &material)?,
            })
        }
        JobKind::FrequencySweep => {
            let fr = s.frequency.as_ref().expect("frequency section");
            let mut problems = Vec::new();
            let mut periods = Vec::new();
            for &f in &fr.frequencies_hz {
                let mut p = dynamic_problem(s, Some(f))?;
                if fr.long_run {
                    p.t_end = fr.long_run_t_end;
                }
                let convention = p.loads.iter().find_map(|l| match l {
                    LoadCase::Pulsating { convention, .. } => Some(*convention),
                    _ => None,
                });
                periods.push(match convention {
                    Some(FrequencyConvention::Angular) => 1.0 / f,
                    _ => 2.0 * std::f64::consts::PI / f,
                });
                problems.push(p);
            }
            Ok(Plan::FrequencySweep { problems, periods })
        }
    }
}

/// Transient problem of a rod scenario; `frequency` replaces the driving
/// frequency of every pulsating load.
fn dynamic_problem(s: &Scenario, frequency: Option<f64>) -> Result<DynamicProblem, ScenarioError> {
    let rod = s.rod.as_ref().expect("rod section");
    let t = s.time.as_ref().expect("time section");
    let disc = compile::discretization(rod, rod.elements)?;
    let material = compile::material(&rod.section, rod.alpha, "rod")?;
    let mut loads = compile::loads(&s.loads, rod.length)?;
    if let Some(f) = frequency {
        for l in &mut loads {
            if let LoadCase::Pulsating { frequency_hz, .. } = l {
                *frequency_hz = f;
            }
        }
    }
    let mut problem = DynamicProblem::new(disc, material, loads, t.dt, t.t_end);
    problem.newton_tol = t.newton_tol;
    problem.max_newton_iters = t.max_newton_iters;
    problem.scheme = compile::scheme(s.scheme.as_ref().expect("scheme section"));
    problem.validate().map_err(|e| ScenarioError::semantic("time", e.to_string()))?;
    Ok(problem)
}

/// How a job ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    SolverFailure { time: Option<f64>, message: String },
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

#[derive(Serialize)]
struct Metadata<'a> {
    software: &'static str,
    version: &'static str,
    job: &'static str,
    result: &'a RunStatus,
    outputs: Vec<String>,
    summary: &'a Value,
    scenario: String,
    created_unix: u64,
}

/// Runs a prepared scenario and writes its files into `dir`.
pub fn execute(s: &Scenario, plan: &Plan, dir: &Path) -> Result<RunReport, RunError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let out = Outputs { dir, prefix: &s.output.prefix };
    let (status, mut files, summary) = match plan {
        Plan::Static { disc, material, loads } => run_static(s, &out, disc, material, loads)?,
        Plan::Dynamic { problem, initial, alphas } => run_dynamic(s, &out, problem, initial, alphas)?,
        Plan::Pendulum { params, wind } => run_pendulum(s, &out, params, wind.as_ref())?,
        Plan::DetProbe { section } => run_det_probe(s, &out, section)?,
        Plan::Convergence { discs, material, loads, reference } => run_convergence(s, &out, discs, material, loads, reference)?,
        Plan::FrequencySweep { problems, periods } => run_sweep(s, &out, problems, periods)?,
    };
    let meta_path = out.path("_meta.json");
    files.push(meta_path.clone());
    let meta = Metadata {
        software: "rodsim",
        version: VERSION,
        job: s.job.keyword(),
        result: &status,
        outputs: files.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect(),
        summary: &summary,
        scenario: s.to_text(),
        created_unix: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    Ok(RunReport { status, files, summary })
}

type JobResult = Result<(RunStatus, Vec<PathBuf>, Value), RunError>;

struct Outputs<'a> {
    dir: &'a Path,
    prefix: &'a str,
}

impl Outputs<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.prefix))
    }
}

/// Buffered CSV file with a fixed header.
pub struct Csv {
    path: PathBuf,
    w: BufWriter<File>,
    line: String,
}

impl Csv {
    pub fn create(path: PathBuf, header: &[String]) -> Result<Self, RunError> {
        let f = File::create(&path).map_err(io_err(&path))?;
        let mut csv = Csv { path, w: BufWriter::new(f), line: String::new() };
        csv.line = header.join(",");
        csv.end_row()?;
        Ok(csv)
    }

    pub fn float(&mut self, v: f64) -> &mut Self {
        self.sep();
        let _ = write!(self.line, "{v:.16e}");
        self
    }

    pub fn int(&mut self, v: usize) -> &mut Self {
        self.sep();
        let _ = write!(self.line, "{v}");
        self
    }

    pub fn text(&mut self, v: &str) -> &mut Self {
        self.sep();
        self.line.push_str(v);
        self
    }

    pub fn vec3(&mut self, v: &Vec3) -> &mut Self {
        self.float(v.x).float(v.y).float(v.z)
    }

    fn sep(&mut self) {
        if !self.line.is_empty() {
            self.line.push(',');
        }
    }

    pub fn end_row(&mut self) -> Result<(), RunError> {
        self.line.push('\n');
        let r = self.w.write_all(self.line.as_bytes());
        self.line.clear();
        r.map_err(io_err(&self.path))
    }

    pub fn finish(mut self) -> Result<PathBuf, RunError> {
        self.w.flush().map_err(io_err(&self.path))?;
        Ok(self.path)
    }
}

fn xyz(name: &str) -> [String; 3] {
    [format!("{name}_x"), format!("{name}_y"), format!("{name}_z")]
}

/// Header of the probe and coefficient columns.
fn shape_header(series: &SeriesSpec, disc: &Discretization) -> Vec<String> {
    let mut h: Vec<String> = (1..=series.probes.len()).flat_map(|i| xyz(&format!("probe{i}"))).collect();
    if series.coefficients {
        h.extend((0..disc.space().dim()).flat_map(|a| xyz(&format!("q{a}"))));
    }
    h
}

fn shape_columns(csv: &mut Csv, series: &SeriesSpec, disc: &Discretization, q: &DVec) {
    for &s in &series.probes {
        let x = disc.position(q, s).unwrap_or_else(|_| Vec3::repeat(f64::NAN));
        csv.vec3(&x);
    }
    if series.coefficients {
        for v in q.iter() {
            csv.float(*v);
        }
    }
}

fn failure(status: &Termination) -> RunStatus {
    match status {
        Termination::Completed => RunStatus::Completed,
        Termination::NewtonFailure { time, error } | Termination::Degenerate { time, error } => {
            RunStatus::SolverFailure { time: Some(*time), message: error.to_string() }
        }
    }
}

fn solver_error(e: rodsim_core::Error) -> RunStatus {
    let time = match &e {
        rodsim_core::Error::NewtonFailure { time, .. } => Some(*time),
        _ => None,
    };
    RunStatus::SolverFailure { time, message: e.to_string() }
}

/// Finite values as numbers, the rest as `null`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn run_static(s: &Scenario, out: &Outputs, disc: &Discretization, material: &MaterialParams, loads: &[LoadCase]) -> JobResult {
    let st = s.statics.as_ref().expect("statics section");
    let series = s.output.series.as_ref().expect("series");
    let mut problem = StaticProblem::new(disc, *material, loads.to_vec(), st.load_steps);
    problem.newton_tol = st.newton_tol;
    problem.max_newton_iters = st.max_newton_iters;
    let (steps, status) = match solve_static(&problem, &DVec::zeros(disc.reduced_dim())) {
        Ok(steps) => (steps, RunStatus::Completed),
        Err(e) => (Vec::new(), solver_error(e)),
    };
    let mut header: Vec<String> = ["step", "load_factor", "newton_iters", "residual_norm"].map(String::from).to_vec();
    header.extend(shape_header(series, disc));
    let mut csv = Csv::create(out.path(".csv"), &header)?;
    let initial = StaticStep {
        load_factor: 0.0,
        q_red: DVec::zeros(disc.reduced_dim()),
        q: disc.q_ref().clone(),
        iterations: 0,
        increment_history: Vec::new(),
        residual_norm: 0.0,
    };
    for (i, step) in std::iter::once(&initial).chain(&steps).enumerate() {
        if i % series.stride != 0 && i != steps.len() {
            continue;
        }
        csv.int(i).float(step.load_factor).int(step.iterations).float(step.residual_norm);
        shape_columns(&mut csv, series, disc, &step.q);
        csv.end_row()?;
    }
    let files = vec![csv.finish()?];
    let summary = match steps.last() {
        Some(last) => {
            let length = disc.space().length();
            let a = disc.position(&last.q, 0.0).unwrap_or_default();
            let b = disc.position(&last.q, length).unwrap_or_default();
            json!({
                "load_steps": steps.len(),
                "max_newton_iters": steps.iter().map(|s| s.iterations).max().unwrap_or(0),
                "end_position": [num(b.x), num(b.y), num(b.z)],
                "end_gap": num((b - a).norm()),
            })
        }
        None => json!({ "load_steps": 0 }),
    };
    Ok((status, files, summary))
}

fn run_dynamic(s: &Scenario, out: &Outputs, problem: &DynamicProblem, initial: &RodState, alphas: &[f64]) -> JobResult {
    let series = s.output.series.as_ref().expect("series");
    let disc = &problem.disc;
    let mut header: Vec<String> = ["t", "kinetic", "potential", "total"].map(String::from).to_vec();
    header.extend(xyz("l"));
    header.extend(xyz("j"));
    header.push("newton_iters".into());
    header.extend(shape_header(series, disc));
    let mut csv = Csv::create(out.path(".csv"), &header)?;
    let mut write_err = None;
    let mut kinetic = Vec::with_capacity(problem.n_steps() + 1);
    let traj = run_with(problem, initial, !alphas.is_empty(), |v| {
        kinetic.push(v.record.kinetic);
        if v.index % series.stride != 0 || write_err.is_some() {
            return;
        }
        let r = v.record;
        csv.float(v.time).float(r.kinetic).float(r.potential).float(r.total);
        csv.vec3(&r.linear_momentum).vec3(&r.angular_momentum).int(v.iterations);
        shape_columns(&mut csv, series, disc, &disc.expand(&v.state.q_red));
        if let Err(e) = csv.end_row() {
            write_err = Some(e);
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let mut files = vec![csv.finish()?];
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return Ok((solver_error(e), files, json!({}))),
    };
    let mut status = failure(&traj.status);
    let mut summary = trajectory_summary(&traj);

    if !alphas.is_empty() {
        let runs = parallel_map(alphas, |&a| {
            let mut p = problem.clone();
            p.material = p.material.with_alpha(a).expect("alpha validated");
            run_with(&p, initial, true, |_| {})
        });
        let mut csv = Csv::create(
            out.path("_alpha.csv"),
            &std::iter::once("t".to_string()).chain(alphas.iter().map(|a| format!("alpha_{}", fmt_f64(*a)))).collect::<Vec<_>>(),
        )?;
        let mut runs_ok = Vec::new();
        for (a, r) in alphas.iter().zip(runs) {
            match r {
                Ok(t) => {
                    if status == RunStatus::Completed {
                        status = failure(&t.status);
                    }
                    runs_ok.push(t);
                }
                Err(e) => {
                    status = solver_error(e);
                    summary["alpha_failure"] = json!(a);
                }
            }
        }
        let n = runs_ok.iter().map(|t| t.states.len()).chain([traj.states.len()]).min().unwrap_or(0);
        let mut last = vec![f64::NAN; runs_ok.len()];
        if runs_ok.len() == alphas.len() {
            for i in (0..n).filter(|i| i % series.stride == 0 || *i + 1 == n) {
                let base = disc.expand(&traj.states[i].q_red);
                csv.float(traj.times[i]);
                for (k, t) in runs_ok.iter().enumerate() {
                    let c = relative_l2_difference(disc.space(), &disc.expand(&t.states[i].q_red), &base).unwrap_or(f64::NAN);
                    last[k] = c;
                    csv.float(c);
                }
                csv.end_row()?;
            }
        }
        files.push(csv.finish()?);
        summary["alpha_change_at_end"] = alphas.iter().zip(&last).map(|(a, c)| json!({ "alpha": a, "change": num(*c) })).collect();
    }

    if let Some(fft) = s.fft.as_ref().filter(|f| f.enabled) {
        let spec = spectrum(&kinetic, problem.dt, fft.threshold, fft.window);
        let mut csv = Csv::create(out.path("_spectrum.csv"), &["frequency_hz".into(), "magnitude".into()])?;
        if let Some(sp) = &spec {
            for (f, m) in sp.freq.iter().zip(&sp.magnitude) {
                csv.float(*f).float(*m);
                csv.end_row()?;
            }
            summary["spectrum"] = json!({
                "samples": sp.samples,
                "truncated_at": sp.truncated_at.map_or(Value::Null, num),
                "band_min_hz": fft.band_min_hz,
                "band_integral": num(sp.band_integral(fft.band_min_hz)),
                "band_mean": num(sp.band_mean(fft.band_min_hz)),
            });
        }
        files.push(csv.finish()?);
    }
    Ok((status, files, summary))
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let totals: Vec<f64> = traj.records.iter().map(|r| r.total).collect();
    let l = max_step_drift(&traj.records, |r| r.linear_momentum);
    let j = max_step_drift(&traj.records, |r| r.angular_momentum);
    json!({
        "completed": traj.completed(),
        "final_time": num(traj.final_time()),
        "steps": traj.times.len().saturating_sub(1),
        "max_newton_iters": traj.iterations.iter().max().copied().unwrap_or(0),
        "max_total_energy": num(totals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        "final_total_energy": totals.last().copied().map_or(Value::Null, num),
        "max_step_drift_linear_momentum": [num(l.x), num(l.y), num(l.z)],
        "max_step_drift_angular_momentum": [num(j.x), num(j.y), num(j.z)],
    })
}

fn run_pendulum(s: &Scenario, out: &Outputs, params: &PendulumParams, wind: Option<&PendulumWind>) -> JobResult {
    let spec = s.pendulum.as_ref().expect("pendulum section");
    let traj = match pendulum_run(params, wind) {
        Ok(t) => t,
        Err(e) => return Ok((solver_error(e), Vec::new(), json!({}))),
    };
    let header = ["t", "theta", "eta", "theta_dot", "eta_dot", "x", "y", "kinetic", "potential", "total", "j3", "newton_iters"];
    let mut csv = Csv::create(out.path(".csv"), &header.map(String::from))?;
    let total = traj.total_energy();
    for i in 0..traj.times.len() {
        let st = &traj.states[i];
        let x = params.position(st);
        csv.float(traj.times[i]).float(st.theta).float(st.eta).float(st.theta_dot).float(st.eta_dot);
        csv.float(x.x).float(x.y).float(traj.kinetic[i]).float(traj.potential[i]).float(total[i]).float(traj.j3[i]);
        csv.int(traj.iterations[i]);
        csv.end_row()?;
    }
    let mut files = vec![csv.finish()?];
    let e0 = total[0];
    let j0 = traj.j3[0];
    let dev = total.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    let mut summary = json!({
        "completed": traj.failure.is_none(),
        "final_time": num(*traj.times.last().unwrap_or(&0.0)),
        "initial_total_energy": num(e0),
        "initial_j3": num(j0),
        "max_j3_deviation": num(traj.j3.iter().map(|j| (j - j0).abs()).fold(0.0, f64::max)),
        "max_energy_deviation": num(dev),
        "max_relative_energy_deviation": if e0.abs() > 0.0 && dev / e0.abs() < 1e3 { num(dev / e0.abs()) } else { Value::Null },
        "final_kinetic": num(*traj.kinetic.last().unwrap_or(&f64::NAN)),
    });
    let mut status = match traj.failure {
        None => RunStatus::Completed,
        Some(t) => RunStatus::SolverFailure { time: Some(t), message: format!("Newton iteration did not converge at t = {t}") },
    };
    if spec.precision_quotient {
        match pendulum_precision_quotient(params, wind) {
            Ok((times, q)) => {
                let mut csv = Csv::create(out.path("_qii.csv"), &["t".into(), "q_ii".into()])?;
                for (t, v) in times.iter().zip(&q) {
                    csv.float(*t);
                    match v {
                        Some(v) => csv.float(*v),
                        None => csv.text(""),
                    };
                    csv.end_row()?;
                }
                files.push(csv.finish()?);
                let defined: Vec<f64> = q.iter().flatten().copied().collect();
                let inside = defined.iter().filter(|v| (3.5..=4.5).contains(*v)).count();
                summary["q_ii_defined"] = json!(defined.len());
                summary["q_ii_fraction_in_3.5_4.5"] = num(inside as f64 / defined.len().max(1) as f64);
            }
            Err(e) => status = solver_error(e),
        }
    }
    Ok((status, files, summary))
}

fn run_det_probe(s: &Scenario, out: &Outputs, section: &BeamSection) -> JobResult {
    let p = s.probe.as_ref().expect("probe section");
    let mut grid = Vec::new();
    for &dt in &p.dts {
        for &ne in &p.elements {
            for &b in &p.bases {
                grid.push((dt, ne, b));
            }
        }
    }
    let dets = parallel_map(&grid, |&(dt, ne, b)| linear_beam_det_probe(compile::probe_basis(b, p), ne, dt, section));
    let header = ["dt", "elements", "basis", "det", "deviation"].map(String::from);
    let mut csv = Csv::create(out.path("_det.csv"), &header)?;
    let mut status = RunStatus::Completed;
    let mut worst: f64 = 0.0;
    for (&(dt, ne, b), d) in grid.iter().zip(dets) {
        let d = match d {
            Ok(d) => d,
            Err(e) => {
                status = solver_error(e);
                f64::NAN
            }
        };
        worst = worst.max((d - 1.0).abs());
        csv.float(dt).int(ne).text(b.keyword()).float(d).float(d - 1.0);
        csv.end_row()?;
    }
    let summary = json!({ "entries": grid.len(), "max_abs_deviation": num(worst) });
    Ok((status, vec![csv.finish()?], summary))
}

/// Observed convergence rate between two meshes.
pub fn rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// Relative error norms of the final static state on every mesh.
pub fn convergence_errors(
    discs: &[Discretization],
    material: &MaterialParams,
    loads: &[LoadCase],
    reference: &CircleReference,
    st: &StaticSpec,
) -> Vec<Result<(ErrorNorms, usize), rodsim_core::Error>> {
    parallel_map(discs, |disc| {
        let mut problem = StaticProblem::new(disc, *material, loads.to_vec(), st.load_steps);
        problem.newton_tol = st.newton_tol;
        problem.max_newton_iters = st.max_newton_iters;
        let steps = solve_static(&problem, &DVec::zeros(disc.reduced_dim()))?;
        let last = steps.last().expect("at least one load step");
        let norms = error_norms(disc.space(), &last.q, &|s| reference.eval(s))?;
        Ok((norms, steps.iter().map(|s| s.iterations).max().unwrap_or(0)))
    })
}

fn run_convergence(
    s: &Scenario,
    out: &Outputs,
    discs: &[Discretization],
    material: &MaterialParams,
    loads: &[LoadCase],
    reference: &CircleReference,
) -> JobResult {
    let st = s.statics.as_ref().expect("statics section");
    let results = convergence_errors(discs, material, loads, reference, st);
    let header = ["elements", "h", "l2", "h1", "h2", "rate_l2", "rate_h1", "rate_h2", "max_newton_iters"].map(String::from);
    let mut csv = Csv::create(out.path("_convergence.csv"), &header)?;
    let mut status = RunStatus::Completed;
    let mut prev: Option<(f64, ErrorNorms)> = None;
    let mut last_rates = [f64::NAN; 3];
    for (disc, r) in discs.iter().zip(results) {
        let ne = disc.space().n_elements();
        let h = disc.space().length() / ne as f64;
        let (n, iters) = match r {
            Ok(v) => v,
            Err(e) => {
                status = solver_error(e);
                prev = None;
                continue;
            }
        };
        let rates = match prev {
            Some((hp, p)) => [rate(p.l2, n.l2, hp, h), rate(p.h1, n.h1, hp, h), rate(p.h2, n.h2, hp, h)],
            None => [f64::NAN; 3],
        };
        csv.int(ne).float(h).float(n.l2).float(n.h1).float(n.h2);
        for r in rates {
            if r.is_nan() {
                csv.text("");
            } else {
                csv.float(r);
            }
        }
        csv.int(iters);
        csv.end_row()?;
        if prev.is_some() {
            last_rates = rates;
        }
        prev = Some((h, n));
    }
    let summary = json!({
        "finest_rate_l2": num(last_rates[0]),
        "finest_rate_h1": num(last_rates[1]),
        "finest_rate_h2": num(last_rates[2]),
    });
    Ok((status, vec![csv.finish()?], summary))
}

/// Probe component series and termination of one driven run.
pub struct DrivenRun {
    pub trajectory: Trajectory,
    pub probe: Vec<f64>,
}

/// Runs `problem` from rest, recording one component of the probe position.
pub fn driven_run(problem: &DynamicProblem, probe_s: f64, component: Component) -> Result<DrivenRun, rodsim_core::Error> {
    let c = match component {
        Component::X => 0,
        Component::Y => 1,
        Component::Z => 2,
    };
    let disc = &problem.disc;
    let mut probe = Vec::with_capacity(problem.n_steps() + 1);
    let trajectory = run_with(problem, &RodState::at_rest(disc), false, |v| {
        probe.push(disc.position(&disc.expand(&v.state.q_red), probe_s).map_or(f64::NAN, |x| x[c]));
    })?;
    Ok(DrivenRun { trajectory, probe })
}

fn run_sweep(s: &Scenario, out: &Outputs, problems: &[DynamicProblem], periods: &[f64]) -> JobResult {
    let fr = s.frequency.as_ref().expect("frequency section");
    let runs = parallel_map(problems, |p| driven_run(p, fr.probe_s, fr.component));
    let header = ["frequency_hz", "period", "completed", "final_time", "mean", "amplitude", "periodic"].map(String::from);
    let mut table = Csv::create(out.path("_sweep.csv"), &header)?;
    let mut files = Vec::new();
    let mut status = RunStatus::Completed;
    let mut rows = Vec::new();
    for (i, ((f, period), run)) in fr.frequencies_hz.iter().zip(periods).zip(runs).enumerate() {
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                status = solver_error(e);
                continue;
            }
        };
        let traj = &run.trajectory;
        if status == RunStatus::Completed {
            status = failure(&traj.status);
        }
        let comp = fr.component.keyword();
        let mut csv = Csv::create(
            out.path(&format!("_f{}.csv", i + 1)),
            &["t".into(), "kinetic".into(), "total".into(), format!("probe_{comp}"), "newton_iters".into()],
        )?;
        for (k, r) in traj.records.iter().enumerate() {
            csv.float(r.t).float(r.kinetic).float(r.total).float(run.probe[k]).int(traj.iterations[k]);
            csv.end_row()?;
        }
        files.push(csv.finish()?);
        let stats = if traj.completed() { steady_state_stats(&run.probe, traj.dt, fr.window, Some(*period)).ok() } else { None };
        table.float(*f).float(*period).text(if traj.completed() { "true" } else { "false" }).float(traj.final_time());
        match stats {
            Some(st) => table.float(st.mean).float(st.amplitude).text(if st.periodic { "true" } else { "false" }),
            None => table.text("").text("").text("false"),
        };
        table.end_row()?;
        rows.push(json!({
            "frequency_hz": f,
            "completed": traj.completed(),
            "mean": stats.map_or(Value::Null, |s| num(s.mean)),
            "amplitude": stats.map_or(Value::Null, |s| num(s.amplitude)),
            "periodic": stats.is_some_and(|s| s.periodic),
        }));
    }
    files.insert(0, table.finish()?);
    Ok((status, files, json!({ "frequencies": rows })))
}
