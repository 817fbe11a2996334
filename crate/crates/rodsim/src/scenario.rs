//! Declarative scenario files.
//!
//! A scenario is plain text with one `key = value` pair per line. `#` starts
//! a comment. A `preset = <name>` line loads a named benchmark first; every
//! other key in the file then replaces the preset value. Keys are grouped in
//! dotted sections (`rod.*`, `time.*`, ...); only the sections used by the
//! selected `job` are accepted. Loads are numbered, `load.<n> = <kind>
//! attr=value ...`, and `load.<n> = none` removes a preset load.
//!
//! Parsing materializes every default, and [`Scenario::to_text`] writes the
//! canonical form that parses back to an identical scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::presets;

/// Scenario parse or validation failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("`{key}`: {message}")]
    Semantic { key: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    pub fn semantic(key: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Semantic { key: key.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ScenarioError>;

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $var:ident => $kw:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($(#[$vm])* $var),+ }

        impl $name {
            pub const KEYWORDS: &'static [&'static str] = &[$($kw),+];

            pub fn keyword(self) -> &'static str {
                match self { $(Self::$var => $kw),+ }
            }

            pub fn from_keyword(s: &str) -> Option<Self> {
                match s { $($kw => Some(Self::$var),)+ _ => None }
            }
        }
    };
}

keyword_enum!(
    JobKind {
        Static => "static",
        Dynamic => "dynamic",
        Pendulum => "pendulum",
        DetProbe => "det_probe",
        ConvergenceSweep => "convergence_sweep",
        FrequencySweep => "frequency_sweep",
    }
);

keyword_enum!(
    Support { Free => "free", Pinned => "pinned", Clamped => "clamped" }
);

keyword_enum!(
    /// Ends that receive the extra outlier constraints.
    OutlierRemoval { Off => "off", On => "on", Start => "start", End => "end" }
);

keyword_enum!(
    Correction { Midpoint => "midpoint", EndpointAverage => "endpoint_average" }
);

keyword_enum!(
    InternalForces { Trapezoidal => "trapezoidal", Midpoint => "midpoint" }
);

keyword_enum!(
    FftWindow { Rectangular => "rectangular", Hann => "hann" }
);

keyword_enum!(
    Convention { Printed => "printed", Angular => "angular" }
);

keyword_enum!(
    ProbeBasisKind { Hermite => "hermite", Spline => "spline", SplineOutlier => "spline_outlier" }
);

keyword_enum!(
    /// Analytic reference of a convergence sweep.
    Reference {
        /// Closed circle of a cantilever under a constant tip moment.
        Circle => "circle",
    }
);

keyword_enum!(
    Component { X => "x", Y => "y", Z => "z" }
);

/// Cross-section given directly or through a solid circular section.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionSpec {
    Direct { ea: f64, ei: f64, a_rho: f64, i_rho: f64 },
    Circular { youngs_modulus: f64, density: f64, diameter: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RodSpec {
    pub degree: usize,
    pub continuity: usize,
    pub elements: usize,
    pub length: f64,
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub support_start: Support,
    pub support_end: Support,
    pub outlier_removal: OutlierRemoval,
    pub section: SectionSpec,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Still,
    Uniform { velocity: [f64; 3] },
    Rotating { v0: f64, beta0: f64, length: f64 },
    Parabolic { c: f64, modulation: f64, omega: f64 },
    /// Freestream table file, resolved against the working directory.
    Table { file: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadSpec {
    /// Point load; with `t_c` it follows the vanishing triangular pulse.
    Point { s: f64, force: [f64; 3], t_c: Option<f64> },
    Gravity { g: [f64; 3] },
    Follower { f0: f64, t_c: Option<f64> },
    TipMoment { moment: [f64; 3], t_c: Option<f64> },
    Pulsating { s: f64, amplitude: f64, frequency_hz: f64, convention: Convention, direction: [f64; 3] },
    Flow { c_m: f64, c_n: f64, c_t: f64, rho_f: f64, diameter: f64, profile: ProfileSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSpec {
    pub load_steps: usize,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub correction: Correction,
    pub internal_forces: InternalForces,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    /// Extra runs with these rotary-inertia factors, compared against the
    /// base run.
    pub alpha_sweep: Vec<f64>,
    /// Amplitude of a seeded random initial velocity on the free dofs.
    pub initial_velocity_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FftSpec {
    pub enabled: bool,
    /// Kinetic energy above which the series is truncated (J).
    pub threshold: f64,
    pub window: FftWindow,
    /// Lower edge of the band whose integrated magnitude is reported (Hz).
    pub band_min_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub elements: Vec<usize>,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpec {
    pub frequencies_hz: Vec<f64>,
    /// Trailing window of the steady-state statistics (s).
    pub window: f64,
    /// Use `long_run_t_end` instead of `time.t_end`.
    pub long_run: bool,
    pub long_run_t_end: f64,
    pub probe_s: f64,
    pub component: Component,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PendulumWindSpec {
    Off,
    /// `c x₁² (1 + modulation sin(omega t)) E₂` acting through linear drag.
    Parabolic { c: f64, modulation: f64, omega: f64, drag: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumSpec {
    pub l0: f64,
    pub k: f64,
    pub mass: f64,
    pub g: f64,
    pub theta: f64,
    pub eta: f64,
    pub theta_dot: f64,
    pub eta_dot: f64,
    pub wind: PendulumWindSpec,
    pub precision_quotient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub dts: Vec<f64>,
    pub elements: Vec<usize>,
    pub bases: Vec<ProbeBasisKind>,
    pub degree: usize,
    pub continuity: usize,
    pub length: f64,
    pub section: SectionSpec,
}

/// Columns of the time-series CSV beyond energies and momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    /// Arc-length positions whose coordinates are written.
    pub probes: Vec<f64>,
    /// Also write every full coefficient.
    pub coefficients: bool,
    /// Write every `stride`-th step.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: String,
    pub prefix: String,
    pub series: Option<SeriesSpec>,
}

/// A fully validated scenario with every default materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub job: JobKind,
    pub seed: u64,
    pub rod: Option<RodSpec>,
    pub loads: Vec<LoadSpec>,
    pub statics: Option<StaticSpec>,
    pub time: Option<TimeSpec>,
    pub scheme: Option<SchemeSpec>,
    pub dynamics: Option<DynamicsSpec>,
    pub fft: Option<FftSpec>,
    pub convergence: Option<ConvergenceSpec>,
    pub frequency: Option<FrequencySpec>,
    pub pendulum: Option<PendulumSpec>,
    pub probe: Option<ProbeSpec>,
    pub output: OutputSpec,
}

/// Every key the format knows, used to tell unknown keys from keys that do
/// not apply to the selected job.
const KNOWN_KEYS: &[&str] = &[
    "name", "job", "seed", "preset",
    "rod.degree", "rod.continuity", "rod.elements", "rod.length", "rod.origin", "rod.direction",
    "rod.support_start", "rod.support_end", "rod.outlier_removal", "rod.section", "rod.ea", "rod.ei",
    "rod.a_rho", "rod.i_rho", "rod.youngs_modulus", "rod.density", "rod.diameter", "rod.alpha",
    "statics.load_steps", "statics.newton_tol", "statics.max_newton_iters",
    "time.dt", "time.t_end", "time.newton_tol", "time.max_newton_iters",
    "scheme.correction", "scheme.internal_forces",
    "dynamics.alpha_sweep", "dynamics.initial_velocity_noise",
    "fft.enabled", "fft.threshold", "fft.window", "fft.band_min_hz",
    "convergence.elements", "convergence.reference",
    "frequency.frequencies_hz", "frequency.window", "frequency.long_run", "frequency.long_run_t_end",
    "frequency.probe_s", "frequency.component",
    "pendulum.l0", "pendulum.k", "pendulum.mass", "pendulum.g", "pendulum.theta", "pendulum.eta",
    "pendulum.theta_dot", "pendulum.eta_dot", "pendulum.wind", "pendulum.wind_c", "pendulum.wind_modulation",
    "pendulum.wind_omega", "pendulum.wind_drag", "pendulum.precision_quotient",
    "probe.dts", "probe.elements", "probe.bases", "probe.degree", "probe.continuity", "probe.length",
    "probe.section", "probe.ea", "probe.ei", "probe.a_rho", "probe.i_rho", "probe.youngs_modulus",
    "probe.density", "probe.diameter",
    "output.dir", "output.prefix", "output.probes", "output.coefficients", "output.stride",
];

/// Raw `key = value` entries in file order.
#[derive(Debug, Clone, Default)]
struct RawEntries {
    map: BTreeMap<String, String>,
}

fn parse_lines(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ScenarioError::Syntax { line, message: format!("expected `key = value`, found `{content}`") })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ScenarioError::Syntax { line, message: format!("invalid key `{key}`") });
        }
        if value.is_empty() {
            return Err(ScenarioError::Syntax { line, message: format!("missing value for `{key}`") });
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(ScenarioError::Syntax { line, message: format!("`{key}` already set on line {prev}") });
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn resolve(text: &str, depth: usize) -> Result<RawEntries> {
    let lines = parse_lines(text)?;
    let mut raw = RawEntries::default();
    if let Some((_, _, name)) = lines.iter().find(|(_, k, _)| k == "preset") {
        if depth > 4 {
            return Err(ScenarioError::semantic("preset", "presets nested too deeply"));
        }
        let base = presets::text(name)
            .ok_or_else(|| ScenarioError::semantic("preset", format!("unknown preset `{name}`; see `list-presets`")))?;
        raw = resolve(base, depth + 1)?;
    }
    for (_, k, v) in lines {
        if k != "preset" {
            raw.map.insert(k, v);
        }
    }
    Ok(raw)
}

impl Scenario {
    /// Parses scenario text, expanding presets and validating every key.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses scenario text, then applies `key=value` overrides before
    /// validation.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut raw = resolve(text, 0)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ScenarioError::semantic(o.clone(), "override must have the form key=value"))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "preset" {
                return Err(ScenarioError::semantic("preset", "cannot be overridden; name it in the file"));
            }
            if v.is_empty() {
                return Err(ScenarioError::semantic(k, "missing value"));
            }
            raw.map.insert(k.to_string(), v.to_string());
        }
        Self::from_fields(Fields { map: raw.map })
    }

    /// Scenario of a named preset.
    pub fn preset(name: &str) -> Result<Self> {
        Self::parse(&format!("preset = {name}\n"))
    }

    fn from_fields(mut f: Fields) -> Result<Self> {
        let job_kw = f.string("job", None)?;
        let job = JobKind::from_keyword(&job_kw).ok_or_else(|| bad_keyword("job", &job_kw, JobKind::KEYWORDS))?;
        let name = f.string("name", Some("custom"))?;
        let seed = f.parse("seed", Some(0u64))?;
        let rod_job = matches!(job, JobKind::Static | JobKind::Dynamic | JobKind::ConvergenceSweep | JobKind::FrequencySweep);

        let rod = if rod_job { Some(f.rod()?) } else { None };
        let loads = if rod_job { f.loads()? } else { Vec::new() };
        let statics = if matches!(job, JobKind::Static | JobKind::ConvergenceSweep) {
            Some(StaticSpec {
                load_steps: f.positive_usize("statics.load_steps", Some(1))?,
                newton_tol: f.positive("statics.newton_tol", Some(1e-10))?,
                max_newton_iters: f.positive_usize("statics.max_newton_iters", Some(50))?,
            })
        } else {
            None
        };
        let time = if matches!(job, JobKind::Dynamic | JobKind::FrequencySweep | JobKind::Pendulum) {
            let dt = f.positive("time.dt", None)?;
            let t_end = f.positive("time.t_end", None)?;
            if t_end < dt {
                return Err(ScenarioError::semantic("time.t_end", "must be at least one time step"));
            }
            Some(TimeSpec {
                dt,
                t_end,
                newton_tol: f.positive("time.newton_tol", Some(1e-10))?,
                max_newton_iters: f.positive_usize("time.max_newton_iters", Some(30))?,
            })
        } else {
            None
        };
        let scheme = if matches!(job, JobKind::Dynamic | JobKind::FrequencySweep) {
            Some(SchemeSpec {
                correction: f.keyword("scheme.correction", Some(Correction::Midpoint), Correction::from_keyword, Correction::KEYWORDS)?,
                internal_forces: f.keyword(
                    "scheme.internal_forces",
                    Some(InternalForces::Trapezoidal),
                    InternalForces::from_keyword,
                    InternalForces::KEYWORDS,
                )?,
            })
        } else {
            None
        };
        let (dynamics, fft) = if job == JobKind::Dynamic {
            let alpha_sweep = f.list("dynamics.alpha_sweep", Some(Vec::new()))?;
            if let Some(a) = alpha_sweep.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(ScenarioError::semantic("dynamics.alpha_sweep", format!("{a} outside [0, 1]")));
            }
            let noise = f.parse("dynamics.initial_velocity_noise", Some(0.0))?;
            if !(noise >= 0.0) {
                return Err(ScenarioError::semantic("dynamics.initial_velocity_noise", "must be non-negative"));
            }
            let fft = FftSpec {
                enabled: f.boolean("fft.enabled", Some(false))?,
                threshold: f.positive("fft.threshold", Some(f64::INFINITY))?,
                window: f.keyword("fft.window", Some(FftWindow::Rectangular), FftWindow::from_keyword, FftWindow::KEYWORDS)?,
                band_min_hz: f.non_negative("fft.band_min_hz", Some(10.0))?,
            };
            (Some(DynamicsSpec { alpha_sweep, initial_velocity_noise: noise }), Some(fft))
        } else {
            (None, None)
        };
        let convergence = if job == JobKind::ConvergenceSweep {
            let elements: Vec<usize> = f.list("convergence.elements", Some(vec![8, 16, 32, 64]))?;
            if elements.len() < 2 || elements.contains(&0) {
                return Err(ScenarioError::semantic("convergence.elements", "needs at least two positive mesh sizes"));
            }
            Some(ConvergenceSpec {
                elements,
                reference: f.keyword("convergence.reference", Some(Reference::Circle), Reference::from_keyword, Reference::KEYWORDS)?,
            })
        } else {
            None
        };
        let frequency = if job == JobKind::FrequencySweep {
            let length = rod.as_ref().map_or(0.0, |r| r.length);
            let frequencies_hz: Vec<f64> = f.list("frequency.frequencies_hz", None)?;
            if frequencies_hz.is_empty() || frequencies_hz.iter().any(|v| !(*v > 0.0)) {
                return Err(ScenarioError::semantic("frequency.frequencies_hz", "needs positive frequencies"));
            }
            let probe_s = f.non_negative("frequency.probe_s", Some(length))?;
            if probe_s > length {
                return Err(ScenarioError::semantic("frequency.probe_s", format!("outside [0, {length}]")));
            }
            if !loads.iter().any(|l| matches!(l, LoadSpec::Pulsating { .. })) {
                return Err(ScenarioError::semantic("load", "a frequency sweep needs a pulsating load"));
            }
            Some(FrequencySpec {
                frequencies_hz,
                window: f.positive("frequency.window", Some(100.0))?,
                long_run: f.boolean("frequency.long_run", Some(false))?,
                long_run_t_end: f.positive("frequency.long_run_t_end", Some(1000.0))?,
                probe_s,
                component: f.keyword("frequency.component", Some(Component::X), Component::from_keyword, Component::KEYWORDS)?,
            })
        } else {
            None
        };
        let pendulum = if job == JobKind::Pendulum { Some(f.pendulum()?) } else { None };
        let probe = if job == JobKind::DetProbe { Some(f.probe()?) } else { None };

        let series = if matches!(job, JobKind::Static | JobKind::Dynamic) {
            let length = rod.as_ref().map_or(0.0, |r| r.length);
            let probes: Vec<f64> = f.list("output.probes", Some(vec![length]))?;
            if let Some(s) = probes.iter().find(|s| !(0.0..=length).contains(*s)) {
                return Err(ScenarioError::semantic("output.probes", format!("{s} outside [0, {length}]")));
            }
            Some(SeriesSpec {
                probes,
                coefficients: f.boolean("output.coefficients", Some(false))?,
                stride: f.positive_usize("output.stride", Some(1))?,
            })
        } else {
            None
        };
        let output = OutputSpec {
            dir: f.string("output.dir", Some("out"))?,
            prefix: f.string("output.prefix", Some(&name))?,
            series,
        };
        if output.prefix.contains(['/', '\\']) {
            return Err(ScenarioError::semantic("output.prefix", "must be a plain file name"));
        }
        f.finish(job)?;
        Ok(Scenario {
            name,
            job,
            seed,
            rod,
            loads,
            statics,
            time,
            scheme,
            dynamics,
            fft,
            convergence,
            frequency,
            pendulum,
            probe,
            output,
        })
    }

    /// Canonical text form; parsing it yields an identical scenario.
    pub fn to_text(&self) -> String {
        let mut w = Writer::default();
        w.kv("name", &self.name);
        w.kv("job", self.job.keyword());
        w.kv("seed", &self.seed.to_string());
        if let Some(r) = &self.rod {
            w.kv("rod.degree", &r.degree.to_string());
            w.kv("rod.continuity", &r.continuity.to_string());
            w.kv("rod.elements", &r.elements.to_string());
            w.kv("rod.length", &fmt_f64(r.length));
            w.kv("rod.origin", &fmt_vec(&r.origin));
            w.kv("rod.direction", &fmt_vec(&r.direction));
            w.kv("rod.support_start", r.support_start.keyword());
            w.kv("rod.support_end", r.support_end.keyword());
            w.kv("rod.outlier_removal", r.outlier_removal.keyword());
            w.section("rod", &r.section);
            w.kv("rod.alpha", &fmt_f64(r.alpha));
            for (i, l) in self.loads.iter().enumerate() {
                w.kv(&format!("load.{}", i + 1), &load_text(l));
            }
        }
        if let Some(s) = &self.statics {
            w.kv("statics.load_steps", &s.load_steps.to_string());
            w.kv("statics.newton_tol", &fmt_f64(s.newton_tol));
            w.kv("statics.max_newton_iters", &s.max_newton_iters.to_string());
        }
        if let Some(t) = &self.time {
            w.kv("time.dt", &fmt_f64(t.dt));
            w.kv("time.t_end", &fmt_f64(t.t_end));
            w.kv("time.newton_tol", &fmt_f64(t.newton_tol));
            w.kv("time.max_newton_iters", &t.max_newton_iters.to_string());
        }
        if let Some(s) = &self.scheme {
            w.kv("scheme.correction", s.correction.keyword());
            w.kv("scheme.internal_forces", s.internal_forces.keyword());
        }
        if let Some(d) = &self.dynamics {
            w.kv("dynamics.alpha_sweep", &fmt_list(&d.alpha_sweep));
            w.kv("dynamics.initial_velocity_noise", &fmt_f64(d.initial_velocity_noise));
        }
        if let Some(f) = &self.fft {
            w.kv("fft.enabled", &f.enabled.to_string());
            w.kv("fft.threshold", &fmt_f64(f.threshold));
            w.kv("fft.window", f.window.keyword());
            w.kv("fft.band_min_hz", &fmt_f64(f.band_min_hz));
        }
        if let Some(c) = &self.convergence {
            w.kv("convergence.elements", &join(c.elements.iter().map(|e| e.to_string())));
            w.kv("convergence.reference", c.reference.keyword());
        }
        if let Some(fr) = &self.frequency {
            w.kv("frequency.frequencies_hz", &fmt_list(&fr.frequencies_hz));
            w.kv("frequency.window", &fmt_f64(fr.window));
            w.kv("frequency.long_run", &fr.long_run.to_string());
            w.kv("frequency.long_run_t_end", &fmt_f64(fr.long_run_t_end));
            w.kv("frequency.probe_s", &fmt_f64(fr.probe_s));
            w.kv("frequency.component", fr.component.keyword());
        }
        if let Some(p) = &self.pendulum {
            w.kv("pendulum.l0", &fmt_f64(p.l0));
            w.kv("pendulum.k", &fmt_f64(p.k));
            w.kv("pendulum.mass", &fmt_f64(p.mass));
            w.kv("pendulum.g", &fmt_f64(p.g));
            w.kv("pendulum.theta", &fmt_f64(p.theta));
            w.kv("pendulum.eta", &fmt_f64(p.eta));
            w.kv("pendulum.theta_dot", &fmt_f64(p.theta_dot));
            w.kv("pendulum.eta_dot", &fmt_f64(p.eta_dot));
            match &p.wind {
                PendulumWindSpec::Off => w.kv("pendulum.wind", "off"),
                PendulumWindSpec::Parabolic { c, modulation, omega, drag } => {
                    w.kv("pendulum.wind", "parabolic");
                    w.kv("pendulum.wind_c", &fmt_f64(*c));
                    w.kv("pendulum.wind_modulation", &fmt_f64(*modulation));
                    w.kv("pendulum.wind_omega", &fmt_f64(*omega));
                    w.kv("pendulum.wind_drag", &fmt_f64(*drag));
                }
            }
            w.kv("pendulum.precision_quotient", &p.precision_quotient.to_string());
        }
        if let Some(p) = &self.probe {
            w.kv("probe.dts", &fmt_list(&p.dts));
            w.kv("probe.elements", &join(p.elements.iter().map(|e| e.to_string())));
            w.kv("probe.bases", &join(p.bases.iter().map(|b| b.keyword().to_string())));
            w.kv("probe.degree", &p.degree.to_string());
            w.kv("probe.continuity", &p.continuity.to_string());
            w.kv("probe.length", &fmt_f64(p.length));
            w.section("probe", &p.section);
        }
        w.kv("output.dir", &self.output.dir);
        w.kv("output.prefix", &self.output.prefix);
        if let Some(s) = &self.output.series {
            w.kv("output.probes", &fmt_list(&s.probes));
            w.kv("output.coefficients", &s.coefficients.to_string());
            w.kv("output.stride", &s.stride.to_string());
        }
        w.out
    }
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn kv(&mut self, key: &str, value: &str) {
        let _ = writeln!(self.out, "{key} = {value}");
    }

    fn section(&mut self, prefix: &str, s: &SectionSpec) {
        match s {
            SectionSpec::Direct { ea, ei, a_rho, i_rho } => {
                self.kv(&format!("{prefix}.section"), "direct");
                self.kv(&format!("{prefix}.ea"), &fmt_f64(*ea));
                self.kv(&format!("{prefix}.ei"), &fmt_f64(*ei));
                self.kv(&format!("{prefix}.a_rho"), &fmt_f64(*a_rho));
                self.kv(&format!("{prefix}.i_rho"), &fmt_f64(*i_rho));
            }
            SectionSpec::Circular { youngs_modulus, density, diameter } => {
                self.kv(&format!("{prefix}.section"), "circular");
                self.kv(&format!("{prefix}.youngs_modulus"), &fmt_f64(*youngs_modulus));
                self.kv(&format!("{prefix}.density"), &fmt_f64(*density));
                self.kv(&format!("{prefix}.diameter"), &fmt_f64(*diameter));
            }
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn fmt_vec(v: &[f64; 3]) -> String {
    join(v.iter().map(|x| fmt_f64(*x)))
}

fn fmt_list(v: &[f64]) -> String {
    if v.is_empty() {
        "none".into()
    } else {
        join(v.iter().map(|x| fmt_f64(*x)))
    }
}

fn join(it: impl Iterator<Item = String>) -> String {
    let v: Vec<String> = it.collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(",")
    }
}

fn fmt_opt_tc(t_c: &Option<f64>) -> String {
    t_c.map_or(String::new(), |t| format!(" t_c={}", fmt_f64(t)))
}

fn load_text(l: &LoadSpec) -> String {
    match l {
        LoadSpec::Point { s, force, t_c } => format!("point s={} force={}{}", fmt_f64(*s), fmt_vec(force), fmt_opt_tc(t_c)),
        LoadSpec::Gravity { g } => format!("gravity g={}", fmt_vec(g)),
        LoadSpec::Follower { f0, t_c } => format!("follower f0={}{}", fmt_f64(*f0), fmt_opt_tc(t_c)),
        LoadSpec::TipMoment { moment, t_c } => format!("tip_moment moment={}{}", fmt_vec(moment), fmt_opt_tc(t_c)),
        LoadSpec::Pulsating { s, amplitude, frequency_hz, convention, direction } => format!(
            "pulsating s={} amplitude={} frequency_hz={} convention={} direction={}",
            fmt_f64(*s),
            fmt_f64(*amplitude),
            fmt_f64(*frequency_hz),
            convention.keyword(),
            fmt_vec(direction)
        ),
        LoadSpec::Flow { c_m, c_n, c_t, rho_f, diameter, profile } => {
            let head = format!(
                "flow c_m={} c_n={} c_t={} rho_f={} diameter={}",
                fmt_f64(*c_m),
                fmt_f64(*c_n),
                fmt_f64(*c_t),
                fmt_f64(*rho_f),
                fmt_f64(*diameter)
            );
            let tail = match profile {
                ProfileSpec::Still => "profile=still".to_string(),
                ProfileSpec::Uniform { velocity } => format!("profile=uniform velocity={}", fmt_vec(velocity)),
                ProfileSpec::Rotating { v0, beta0, length } => format!(
                    "profile=rotating v0={} beta0={} profile_length={}",
                    fmt_f64(*v0),
                    fmt_f64(*beta0),
                    fmt_f64(*length)
                ),
                ProfileSpec::Parabolic { c, modulation, omega } => format!(
                    "profile=parabolic c={} modulation={} omega={}",
                    fmt_f64(*c),
                    fmt_f64(*modulation),
                    fmt_f64(*omega)
                ),
                ProfileSpec::Table { file } => format!("profile=table file={file}"),
            };
            format!("{head} {tail}")
        }
    }
}

fn bad_keyword(key: &str, got: &str, allowed: &[&str]) -> ScenarioError {
    ScenarioError::semantic(key, format!("`{got}` is not one of {}", allowed.join(", ")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = match v {
        "inf" => f64::INFINITY,
        _ => v.parse().map_err(|_| ScenarioError::semantic(key, format!("`{v}` is not a number")))?,
    };
    if x.is_nan() || x == f64::NEG_INFINITY {
        return Err(ScenarioError::semantic(key, format!("`{v}` is not a usable number")));
    }
    Ok(x)
}

fn parse_finite(key: &str, v: &str) -> Result<f64> {
    let x = parse_f64(key, v)?;
    if !x.is_finite() {
        return Err(ScenarioError::semantic(key, "must be finite"));
    }
    Ok(x)
}

fn parse_vec(key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ScenarioError::semantic(key, format!("expected three comma-separated numbers, got `{v}`")));
    }
    Ok([parse_finite(key, parts[0])?, parse_finite(key, parts[1])?, parse_finite(key, parts[2])?])
}

/// Values that can appear as a scalar or a list element.
trait Scalar: Sized {
    fn parse_scalar(key: &str, v: &str) -> Result<Self>;
}

impl Scalar for f64 {
    fn parse_scalar(key: &str, v: &str) -> Result<Self> {
        parse_f64(key, v)
    }
}

impl Scalar for usize {
    fn parse_scalar(key: &str, v: &str) -> Result<Self> {
        v.parse().map_err(|_| ScenarioError::semantic(key, format!("`{v}` is not a non-negative integer")))
    }
}

impl Scalar for u64 {
    fn parse_scalar(key: &str, v: &str) -> Result<Self> {
        v.parse().map_err(|_| ScenarioError::semantic(key, format!("`{v}` is not a non-negative integer")))
    }
}

impl Scalar for ProbeBasisKind {
    fn parse_scalar(key: &str, v: &str) -> Result<Self> {
        ProbeBasisKind::from_keyword(v).ok_or_else(|| bad_keyword(key, v, ProbeBasisKind::KEYWORDS))
    }
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| ScenarioError::semantic(key, "is required"))
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        match (self.take(key), default) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(d.to_string()),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn parse<T: Scalar>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match (self.take(key), default) {
            (Some(v), _) => T::parse_scalar(key, &v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn finite(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.parse(key, default)?;
        if !v.is_finite() {
            return Err(ScenarioError::semantic(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.parse(key, default)?;
        if !(v > 0.0) {
            return Err(ScenarioError::semantic(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn non_negative(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.finite(key, default)?;
        if !(v >= 0.0) {
            return Err(ScenarioError::semantic(key, format!("must be non-negative, got {v}")));
        }
        Ok(v)
    }

    fn positive_usize(&mut self, key: &str, default: Option<usize>) -> Result<usize> {
        let v = self.parse(key, default)?;
        if v == 0 {
            return Err(ScenarioError::semantic(key, "must be positive"));
        }
        Ok(v)
    }

    fn boolean(&mut self, key: &str, default: Option<bool>) -> Result<bool> {
        match (self.take(key).as_deref(), default) {
            (Some("true" | "on" | "yes"), _) => Ok(true),
            (Some("false" | "off" | "no"), _) => Ok(false),
            (Some(v), _) => Err(ScenarioError::semantic(key, format!("`{v}` is not a boolean"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn vec3(&mut self, key: &str, default: Option<[f64; 3]>) -> Result<[f64; 3]> {
        match (self.take(key), default) {
            (Some(v), _) => parse_vec(key, &v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn keyword<T>(&mut self, key: &str, default: Option<T>, from: fn(&str) -> Option<T>, allowed: &[&str]) -> Result<T> {
        match (self.take(key), default) {
            (Some(v), _) => from(&v).ok_or_else(|| bad_keyword(key, &v, allowed)),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn list<T: Scalar>(&mut self, key: &str, default: Option<Vec<T>>) -> Result<Vec<T>> {
        match (self.take(key), default) {
            (Some(v), _) if v == "none" => Ok(Vec::new()),
            (Some(v), _) => v.split(',').map(|p| T::parse_scalar(key, p.trim())).collect(),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(key, "is required")),
        }
    }

    fn section(&mut self, prefix: &str) -> Result<SectionSpec> {
        let key = format!("{prefix}.section");
        let kind = self.required(&key)?;
        let k = |name: &str| format!("{prefix}.{name}");
        match kind.as_str() {
            "direct" => Ok(SectionSpec::Direct {
                ea: self.positive(&k("ea"), None)?,
                ei: self.positive(&k("ei"), None)?,
                a_rho: self.positive(&k("a_rho"), None)?,
                i_rho: self.non_negative(&k("i_rho"), None)?,
            }),
            "circular" => Ok(SectionSpec::Circular {
                youngs_modulus: self.positive(&k("youngs_modulus"), None)?,
                density: self.positive(&k("density"), None)?,
                diameter: self.positive(&k("diameter"), None)?,
            }),
            other => Err(bad_keyword(&key, other, &["direct", "circular"])),
        }
    }

    fn rod(&mut self) -> Result<RodSpec> {
        let degree = self.parse("rod.degree", Some(3usize))?;
        if degree < 2 {
            return Err(ScenarioError::semantic("rod.degree", "the rod needs second derivatives, use degree ≥ 2"));
        }
        let continuity = self.parse("rod.continuity", Some(1usize))?;
        if continuity == 0 || continuity >= degree {
            return Err(ScenarioError::semantic(
                "rod.continuity",
                format!("must satisfy 1 ≤ continuity < degree = {degree}, got {continuity}"),
            ));
        }
        let direction = self.vec3("rod.direction", Some([1.0, 0.0, 0.0]))?;
        if direction.iter().all(|x| *x == 0.0) {
            return Err(ScenarioError::semantic("rod.direction", "must be nonzero"));
        }
        let alpha = self.finite("rod.alpha", Some(1.0))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ScenarioError::semantic("rod.alpha", "must lie in [0, 1]"));
        }
        Ok(RodSpec {
            degree,
            continuity,
            elements: self.positive_usize("rod.elements", Some(20))?,
            length: self.positive("rod.length", None)?,
            origin: self.vec3("rod.origin", Some([0.0; 3]))?,
            direction,
            support_start: self.keyword("rod.support_start", Some(Support::Clamped), Support::from_keyword, Support::KEYWORDS)?,
            support_end: self.keyword("rod.support_end", Some(Support::Free), Support::from_keyword, Support::KEYWORDS)?,
            outlier_removal: self.keyword(
                "rod.outlier_removal",
                Some(OutlierRemoval::Off),
                OutlierRemoval::from_keyword,
                OutlierRemoval::KEYWORDS,
            )?,
            section: self.section("rod")?,
            alpha,
        })
    }

    fn loads(&mut self) -> Result<Vec<LoadSpec>> {
        let keys: Vec<String> = self.map.keys().filter(|k| k.starts_with("load.")).cloned().collect();
        let mut numbered = BTreeMap::new();
        for key in keys {
            let idx: usize = key["load.".len()..]
                .parse()
                .map_err(|_| ScenarioError::semantic(&key, "load keys are `load.<positive integer>`"))?;
            if idx == 0 {
                return Err(ScenarioError::semantic(&key, "load numbers start at 1"));
            }
            let value = self.take(&key).unwrap_or_default();
            if value != "none" {
                numbered.insert(idx, parse_load(&key, &value)?);
            }
        }
        Ok(numbered.into_values().collect())
    }

    fn pendulum(&mut self) -> Result<PendulumSpec> {
        let wind_kind = self.string("pendulum.wind", Some("off"))?;
        let mut spec = PendulumSpec {
            l0: self.positive("pendulum.l0", None)?,
            k: self.positive("pendulum.k", None)?,
            mass: self.positive("pendulum.mass", None)?,
            g: self.non_negative("pendulum.g", Some(0.0))?,
            theta: self.finite("pendulum.theta", Some(0.0))?,
            eta: self.finite("pendulum.eta", Some(0.0))?,
            theta_dot: self.finite("pendulum.theta_dot", Some(0.0))?,
            eta_dot: self.finite("pendulum.eta_dot", Some(0.0))?,
            wind: PendulumWindSpec::Off,
            precision_quotient: self.boolean("pendulum.precision_quotient", Some(false))?,
        };
        if spec.l0 + spec.eta <= 0.0 {
            return Err(ScenarioError::semantic("pendulum.eta", "spring length l0 + eta must stay positive"));
        }
        spec.wind = match wind_kind.as_str() {
            "off" => PendulumWindSpec::Off,
            "parabolic" => PendulumWindSpec::Parabolic {
                c: self.finite("pendulum.wind_c", Some(1.0))?,
                modulation: self.finite("pendulum.wind_modulation", Some(0.1))?,
                omega: self.finite("pendulum.wind_omega", None)?,
                drag: self.non_negative("pendulum.wind_drag", None)?,
            },
            other => return Err(bad_keyword("pendulum.wind", other, &["off", "parabolic"])),
        };
        Ok(spec)
    }

    fn probe(&mut self) -> Result<ProbeSpec> {
        let dts: Vec<f64> = self.list("probe.dts", None)?;
        if dts.is_empty() || dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(ScenarioError::semantic("probe.dts", "needs positive time steps"));
        }
        let elements: Vec<usize> = self.list("probe.elements", None)?;
        if elements.is_empty() || elements.contains(&0) {
            return Err(ScenarioError::semantic("probe.elements", "needs positive mesh sizes"));
        }
        let bases: Vec<ProbeBasisKind> = self.list("probe.bases", None)?;
        if bases.is_empty() {
            return Err(ScenarioError::semantic("probe.bases", "needs at least one basis"));
        }
        let degree = self.parse("probe.degree", Some(3usize))?;
        let continuity = self.parse("probe.continuity", Some(1usize))?;
        if degree < 2 || continuity == 0 || continuity >= degree {
            return Err(ScenarioError::semantic("probe.continuity", "must satisfy 1 ≤ continuity < degree, degree ≥ 2"));
        }
        Ok(ProbeSpec {
            dts,
            elements,
            bases,
            degree,
            continuity,
            length: self.positive("probe.length", None)?,
            section: self.section("probe")?,
        })
    }

    fn finish(self, job: JobKind) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            let known = KNOWN_KEYS.contains(&key.as_str()) || key.starts_with("load.");
            let message = if known {
                format!("does not apply to job `{}` or to the chosen options", job.keyword())
            } else {
                "unknown key".to_string()
            };
            return Err(ScenarioError::semantic(key.clone(), message));
        }
        Ok(())
    }
}

fn parse_load(key: &str, value: &str) -> Result<LoadSpec> {
    let mut tokens = value.split_whitespace();
    let kind = tokens.next().unwrap_or_default();
    let mut attrs = BTreeMap::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| ScenarioError::semantic(key, format!("expected attr=value, found `{t}`")))?;
        if attrs.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ScenarioError::semantic(key, format!("attribute `{k}` given twice")));
        }
    }
    let mut a = LoadAttrs { key, attrs };
    let load = match kind {
        "point" => LoadSpec::Point { s: a.non_negative("s")?, force: a.vec("force", None)?, t_c: a.t_c()? },
        "gravity" => LoadSpec::Gravity { g: a.vec("g", None)? },
        "follower" => LoadSpec::Follower { f0: a.finite("f0", None)?, t_c: a.t_c()? },
        "tip_moment" => LoadSpec::TipMoment { moment: a.vec("moment", None)?, t_c: a.t_c()? },
        "pulsating" => LoadSpec::Pulsating {
            s: a.non_negative("s")?,
            amplitude: a.non_negative("amplitude")?,
            frequency_hz: a.finite("frequency_hz", None)?,
            convention: match a.take("convention").as_deref() {
                None => Convention::Printed,
                Some(v) => Convention::from_keyword(v)
                    .ok_or_else(|| bad_keyword(&format!("{key}.convention"), v, Convention::KEYWORDS))?,
            },
            direction: a.vec("direction", Some([1.0, 0.0, 0.0]))?,
        },
        "flow" => {
            let c_m = a.non_negative("c_m")?;
            let c_n = a.non_negative("c_n")?;
            let c_t = a.non_negative("c_t")?;
            let rho_f = a.non_negative("rho_f")?;
            let diameter = a.finite("diameter", None)?;
            if !(diameter > 0.0) {
                return Err(ScenarioError::semantic(format!("{key}.diameter"), "must be positive"));
            }
            let profile = match a.take("profile").as_deref().unwrap_or("still") {
                "still" => ProfileSpec::Still,
                "uniform" => ProfileSpec::Uniform { velocity: a.vec("velocity", None)? },
                "rotating" => ProfileSpec::Rotating {
                    v0: a.finite("v0", None)?,
                    beta0: a.finite("beta0", None)?,
                    length: a.finite("profile_length", None)?,
                },
                "parabolic" => ProfileSpec::Parabolic {
                    c: a.finite("c", None)?,
                    modulation: a.finite("modulation", Some(0.0))?,
                    omega: a.finite("omega", Some(0.0))?,
                },
                "table" => ProfileSpec::Table {
                    file: a.take("file").ok_or_else(|| ScenarioError::semantic(format!("{key}.file"), "is required"))?,
                },
                other => {
                    return Err(bad_keyword(
                        &format!("{key}.profile"),
                        other,
                        &["still", "uniform", "rotating", "parabolic", "table"],
                    ))
                }
            };
            LoadSpec::Flow { c_m, c_n, c_t, rho_f, diameter, profile }
        }
        other => {
            return Err(bad_keyword(key, other, &["point", "gravity", "follower", "tip_moment", "pulsating", "flow"]));
        }
    };
    if let Some(k) = a.attrs.keys().next() {
        return Err(ScenarioError::semantic(format!("{key}.{k}"), format!("unknown attribute for a `{kind}` load")));
    }
    Ok(load)
}

struct LoadAttrs<'a> {
    key: &'a str,
    attrs: BTreeMap<String, String>,
}

impl LoadAttrs<'_> {
    fn name(&self, attr: &str) -> String {
        format!("{}.{attr}", self.key)
    }

    fn take(&mut self, attr: &str) -> Option<String> {
        self.attrs.remove(attr)
    }

    fn finite(&mut self, attr: &str, default: Option<f64>) -> Result<f64> {
        match (self.take(attr), default) {
            (Some(v), _) => parse_finite(&self.name(attr), &v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(self.name(attr), "is required")),
        }
    }

    fn non_negative(&mut self, attr: &str) -> Result<f64> {
        let v = self.finite(attr, None)?;
        if v < 0.0 {
            return Err(ScenarioError::semantic(self.name(attr), "must be non-negative"));
        }
        Ok(v)
    }

    fn vec(&mut self, attr: &str, default: Option<[f64; 3]>) -> Result<[f64; 3]> {
        match (self.take(attr), default) {
            (Some(v), _) => parse_vec(&self.name(attr), &v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::semantic(self.name(attr), "is required")),
        }
    }

    fn t_c(&mut self) -> Result<Option<f64>> {
        match self.take("t_c") {
            None => Ok(None),
            Some(v) => {
                let t = parse_finite(&self.name("t_c"), &v)?;
                if !(t > 0.0) {
                    return Err(ScenarioError::semantic(self.name("t_c"), "must be positive"));
                }
                Ok(Some(t))
            }
        }
    }
}
