//! Sectioned `key = value` scenario files.
//!
//! ```text
//! # comment
//! [gains]
//! k1 = 61
//! l0 = -1, -1, -1
//! ```
//!
//! Every key has a default; an empty file reproduces the reference
//! experiment. Unknown sections and keys are rejected. Fault events are given
//! as `[fault.1]`, `[fault.2]`, ... sections, which replace the preset chosen
//! by `[faults] preset`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use faultsim_core::allocator::AllocatorMode;
use faultsim_core::plant::{ActuatorParams, CouplingSign, FaultEvent, FaultProfile, FaultSchedule};
use faultsim_core::scenario::{certify_gains, ScenarioConfig};
use faultsim_core::Error as CoreError;

use crate::error::{ConfigError, HarnessError, Result};

/// Which artifacts a run writes into its output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputConfig {
    /// Trajectory file name; `None` disables it.
    pub csv: Option<String>,
    pub report: Option<String>,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { csv: Some("trajectory.csv".into()), report: Some("report.txt".into()), svg: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
    /// Wind-trace CSV as written in the file (relative paths are resolved
    /// against the config file's directory by [`load_config`]).
    pub wind_trace: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

impl Entry {
    fn path(&self) -> String {
        format!("{}.{}", self.section, self.key)
    }

    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::new(Some(self.line), self.path(), message)
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        self.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("expected a finite number, got `{}`", self.value)))
    }

    fn opt_f64(&self) -> Result<Option<f64>, ConfigError> {
        if self.value == "none" {
            Ok(None)
        } else {
            self.f64().map(Some)
        }
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.value.parse().map_err(|_| self.err(format!("expected a nonnegative integer, got `{}`", self.value)))
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.value.parse().map_err(|_| self.err(format!("expected a nonnegative integer, got `{}`", self.value)))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(self.err(format!("expected true or false, got `{v}`"))),
        }
    }

    fn list(&self) -> Result<Vec<f64>, ConfigError> {
        self.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("expected a comma-separated list of numbers, got `{}`", self.value)))
            })
            .collect()
    }

    /// One-based actuator indices converted to zero-based.
    fn indices(&self) -> Result<Vec<usize>, ConfigError> {
        if self.value.is_empty() {
            return Ok(Vec::new());
        }
        self.value
            .split(',')
            .map(|s| match s.trim().parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(self.err(format!("expected one-based actuator indices, got `{}`", self.value))),
            })
            .collect()
    }

    fn file_name(&self) -> Option<String> {
        (self.value != "none").then(|| self.value.clone())
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section: Option<String> = None;
    let mut seen = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(inner) = s.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| ConfigError::new(Some(line), "", format!("malformed section header `{s}`")))?;
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(line), "", format!("expected `key = value`, got `{s}`")))?;
        let section = section
            .clone()
            .ok_or_else(|| ConfigError::new(Some(line), key.trim(), "key outside of any section"))?;
        let entry = Entry { line, section, key: key.trim().to_string(), value: value.trim().to_string() };
        if let Some(prev) = seen.insert(entry.path(), line) {
            return Err(entry.err(format!("duplicate key (first set on line {prev})")));
        }
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Default)]
struct FaultDraft {
    actuator: Option<usize>,
    t_on: Option<f64>,
    t_off: Option<f64>,
    wn2: Option<f64>,
    tzw: Option<f64>,
    profile: Option<String>,
    ramp_time: Option<f64>,
    line: usize,
}

/// Parses config text into a validated [`RunConfig`]. Under `strict = true`
/// the gain conditions are checked as well.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = tokenize(text)?;
    let mut run = RunConfig::default();
    let cfg = &mut run.scenario;

    // actuator count first: it sizes the per-actuator defaults
    let n = match entries.iter().find(|e| e.section == "actuators" && e.key == "count") {
        Some(e) => {
            let n = e.usize()?;
            if n == 0 {
                return Err(e.err("at least one actuator is required").into());
            }
            n
        }
        None => 3,
    };
    cfg.nominal = vec![ActuatorParams::NOMINAL; n];
    cfg.high.l0 = vec![-1.0; n];
    cfg.low.k2 = [50.0, 1.0].repeat(n);

    let mut faults: BTreeMap<usize, FaultDraft> = BTreeMap::new();
    let mut known: Option<(Vec<usize>, &Entry)> = None;
    let mut mode: Option<&Entry> = None;
    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("scenario", "name") => cfg.name = e.value.clone(),
            ("scenario", "strict") => cfg.strict = e.bool()?,
            ("grid", "t0") => cfg.grid.t0 = e.f64()?,
            ("grid", "tf") => cfg.grid.tf = e.f64()?,
            ("grid", "dt") => cfg.grid.dt = e.f64()?,
            ("rotor", "m1") => cfg.rotor.m1 = e.f64()?,
            ("rotor", "m2") => cfg.rotor.m2 = e.f64()?,
            ("rotor", "m3") => cfg.rotor.m3 = e.f64()?,
            ("rotor", "c") => cfg.rotor.c = e.f64()?,
            ("rotor", "inertia") => cfg.rotor.inertia = e.f64()?,
            ("rotor", "p0") => cfg.rotor.p0 = e.f64()?,
            ("rotor", "coupling") => {
                cfg.rotor.coupling = match e.value.as_str() {
                    "subtract" => CouplingSign::Subtract,
                    "add" => CouplingSign::Add,
                    v => return Err(e.err(format!("expected subtract or add, got `{v}`")).into()),
                }
            }
            ("rotor", "z0") => cfg.z0 = e.f64()?,
            ("rotor", "z_init") => cfg.z_init = e.opt_f64()?,
            ("actuators", "count") => {}
            ("actuators", "wn2") => {
                let v = e.f64()?;
                cfg.nominal.iter_mut().for_each(|a| a.wn2 = v);
            }
            ("actuators", "two_zeta_wn") => {
                let v = e.f64()?;
                cfg.nominal.iter_mut().for_each(|a| a.two_zeta_wn = v);
            }
            ("faults", "preset") => {
                cfg.faults = match e.value.as_str() {
                    "reference" => FaultSchedule::reference(),
                    "none" => FaultSchedule::default(),
                    v => return Err(e.err(format!("expected reference or none, got `{v}`")).into()),
                }
            }
            ("wind", "w0") => cfg.wind.w0 = e.f64()?,
            ("wind", "w_min") => cfg.wind.w_min = e.f64()?,
            ("wind", "w_max") => cfg.wind.w_max = e.f64()?,
            ("wind", "tau_c") => cfg.wind.tau_c = e.f64()?,
            ("wind", "sigma") => cfg.wind.sigma = e.f64()?,
            ("wind", "seed") => cfg.wind.seed = e.u64()?,
            ("wind", "trace") => run.wind_trace = e.file_name().map(PathBuf::from),
            ("gains", "k1") => cfg.high.k1 = e.f64()?,
            ("gains", "eta") => cfg.high.eta = e.f64()?,
            ("gains", "l0") => cfg.high.l0 = e.list()?,
            ("gains", "gamma") => cfg.high.gamma = e.f64()?,
            ("gains", "alpha") => cfg.high.alpha = e.f64()?,
            ("gains", "h_bar_z") => cfg.high.h_bar_z = e.f64()?,
            ("gains", "l_bar_w") => cfg.high.l_bar_w = e.f64()?,
            ("gains", "k2") => cfg.low.k2 = e.list()?,
            ("gains", "alpha_l") => cfg.low.alpha_l = e.f64()?,
            ("gains", "lambda1") => cfg.low.lambda1 = e.f64()?,
            ("gains", "lambda2") => cfg.low.lambda2 = e.f64()?,
            ("estimator", "af") => cfg.estimator.af = e.f64()?,
            ("estimator", "mu0") => cfg.estimator.mu0 = e.f64()?,
            ("estimator", "k0") => cfg.estimator.k0 = e.f64()?,
            ("estimator", "p_init") => cfg.estimator.p_init = e.f64()?,
            ("estimator", "wn2_nominal") => cfg.estimator.deviation.wn2_0 = e.f64()?,
            ("estimator", "two_zeta_wn_nominal") => cfg.estimator.deviation.tzw_0 = e.f64()?,
            ("estimator", "d_omega") => cfg.estimator.deviation.d_w = e.f64()?,
            ("estimator", "d_zeta") => cfg.estimator.deviation.d_z = e.f64()?,
            ("allocator", "mode") => mode = Some(e),
            ("allocator", "known_faulty") => known = Some((e.indices()?, e)),
            ("allocator", "tau") => cfg.allocator.tau = e.f64()?,
            ("allocator", "tau_off") => cfg.allocator.tau_off = e.f64()?,
            ("allocator", "hysteresis") => cfg.allocator.hysteresis = e.bool()?,
            ("excitation", "amplitude") => cfg.excitation.amplitude = e.f64()?,
            ("excitation", "frequency") => cfg.excitation.frequency = e.f64()?,
            ("metrics", "e_tol") => cfg.metrics.e_tol = e.f64()?,
            ("metrics", "guard") => cfg.metrics.guard = e.f64()?,
            ("metrics", "recovery_threshold") => cfg.metrics.recovery_threshold = e.f64()?,
            ("output", "csv") => run.output.csv = e.file_name(),
            ("output", "report") => run.output.report = e.file_name(),
            ("output", "svg") => run.output.svg = e.bool()?,
            (section, key) if section.starts_with("fault.") => {
                let id: usize = section["fault.".len()..]
                    .parse()
                    .map_err(|_| e.err(format!("fault sections are named [fault.N], got [{section}]")))?;
                let d = faults.entry(id).or_insert_with(|| FaultDraft { line: e.line, ..Default::default() });
                match key {
                    "actuator" => {
                        let i = e.usize()?;
                        if i == 0 {
                            return Err(e.err("actuators are numbered from 1").into());
                        }
                        d.actuator = Some(i - 1);
                    }
                    "t_on" => d.t_on = Some(e.f64()?),
                    "t_off" => d.t_off = Some(e.f64()?),
                    "wn2" => d.wn2 = Some(e.f64()?),
                    "two_zeta_wn" => d.tzw = Some(e.f64()?),
                    "profile" => d.profile = Some(e.value.clone()),
                    "ramp_time" => d.ramp_time = Some(e.f64()?),
                    _ => return Err(e.err("unknown key").into()),
                }
            }
            (section, _) if !SECTIONS.contains(&section) => {
                return Err(ConfigError::new(Some(e.line), section, "unknown section").into());
            }
            _ => return Err(e.err("unknown key").into()),
        }
    }

    if let Some(e) = mode {
        cfg.allocator.mode = match e.value.as_str() {
            "splitter" => AllocatorMode::Splitter,
            "uniform" => AllocatorMode::Uniform,
            "known" => AllocatorMode::KnownFaultSet(known.as_ref().map(|k| k.0.clone()).unwrap_or_default()),
            v => return Err(e.err(format!("expected splitter, uniform or known, got `{v}`")).into()),
        };
    } else if let Some((_, e)) = &known {
        return Err(e.err("only meaningful with allocator.mode = known").into());
    }

    if !faults.is_empty() {
        let mut events = Vec::new();
        for (id, d) in faults {
            let key = format!("fault.{id}");
            let missing = |k: &str| ConfigError::new(Some(d.line), format!("{key}.{k}"), "required key missing");
            let mut target = ActuatorParams::FAULT_TARGET;
            if let Some(v) = d.wn2 {
                target.wn2 = v;
            }
            if let Some(v) = d.tzw {
                target.two_zeta_wn = v;
            }
            let profile = match d.profile.as_deref() {
                None | Some("abrupt") => FaultProfile::Abrupt,
                Some("ramp") => FaultProfile::Ramp { ramp_time: d.ramp_time.ok_or_else(|| missing("ramp_time"))? },
                Some(v) => {
                    return Err(ConfigError::new(Some(d.line), format!("{key}.profile"), format!("expected abrupt or ramp, got `{v}`")).into())
                }
            };
            events.push(FaultEvent {
                actuator: d.actuator.ok_or_else(|| missing("actuator"))?,
                t_on: d.t_on.ok_or_else(|| missing("t_on"))?,
                t_off: d.t_off.ok_or_else(|| missing("t_off"))?,
                target,
                profile,
            });
        }
        cfg.faults = FaultSchedule { events };
    }

    validate(&run, &entries)?;
    if run.scenario.strict {
        let report = certify_gains(&run.scenario)?;
        if !report.k1.satisfied {
            return Err(HarnessError::GainCheck(format!(
                "gains.k1 = {} is below the sufficient threshold {:.4}",
                run.scenario.high.k1, report.k1.threshold
            )));
        }
        if !report.k2.satisfied {
            return Err(HarnessError::GainCheck(format!(
                "gains.k2 fails the low-level certificate (max eigenvalue {:.4} > 0)",
                report.k2.max_eig
            )));
        }
    }
    Ok(run)
}

const SECTIONS: [&str; 13] = [
    "scenario", "grid", "rotor", "actuators", "faults", "wind", "gains", "estimator", "allocator", "excitation",
    "metrics", "output", "fault",
];

/// Runs the component validators one section at a time so an invariant
/// violation can be pinned to the offending key.
fn validate(run: &RunConfig, entries: &[Entry]) -> Result<(), ConfigError> {
    let cfg = &run.scenario;
    let n = cfg.n_actuators();
    let checks: [(&str, faultsim_core::Result<()>); 8] = [
        ("grid", cfg.grid.validate()),
        ("rotor", cfg.rotor.validate()),
        ("actuators", cfg.nominal.iter().try_for_each(|a| a.validate())),
        ("faults", cfg.faults.validate(n)),
        ("wind", cfg.wind.validate()),
        ("gains", cfg.high.validate(n).and_then(|_| cfg.low.validate(n))),
        ("estimator", cfg.estimator.validate()),
        ("scenario", cfg.validate()),
    ];
    for (section, result) in checks {
        if let Err(err) = result {
            let message = match err {
                CoreError::Config(m) => m,
                other => other.to_string(),
            };
            return Err(locate(section, message, entries));
        }
    }
    Ok(())
}

fn locate(section: &str, message: String, entries: &[Entry]) -> ConfigError {
    let words: Vec<&str> = message.split(|c: char| !(c.is_alphanumeric() || c == '_')).collect();
    let in_section = |e: &&Entry| e.section == section || (section == "faults" && e.section.starts_with("fault."));
    let hit = entries
        .iter()
        .filter(in_section)
        .find(|e| words.contains(&e.key.as_str()))
        .or_else(|| entries.iter().find(|e| words.contains(&e.key.as_str())));
    match hit {
        Some(e) => e.err(message),
        None => ConfigError::new(None, section, message),
    }
}

/// Reads a config file and loads the wind trace it references.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut run = parse_config(&text).map_err(|e| match e {
        HarnessError::Config(c) => HarnessError::Config(c.in_file(path)),
        other => other,
    })?;
    if let Some(trace) = &run.wind_trace {
        let resolved = if trace.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(trace)
        } else {
            trace.clone()
        };
        run.scenario.wind_trace = Some(crate::csvio::read_wind_trace(&resolved)?);
        run.wind_trace = Some(resolved);
    }
    Ok(run)
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Fully resolved config in the input format; parsing it back yields the same config.
pub fn dump_config(run: &RunConfig) -> String {
    let c = &run.scenario;
    let mut s = String::new();
    let none = |o: &Option<String>| o.clone().unwrap_or_else(|| "none".into());
    let _ = writeln!(s, "[scenario]\nname = {}\nstrict = {}\n", c.name, c.strict);
    let _ = writeln!(s, "[grid]\nt0 = {}\ntf = {}\ndt = {}\n", c.grid.t0, c.grid.tf, c.grid.dt);
    let r = &c.rotor;
    let coupling = match r.coupling {
        CouplingSign::Subtract => "subtract",
        CouplingSign::Add => "add",
    };
    let _ = writeln!(
        s,
        "[rotor]\nm1 = {}\nm2 = {}\nm3 = {}\nc = {}\ninertia = {}\np0 = {}\ncoupling = {coupling}\nz0 = {}\nz_init = {}\n",
        r.m1,
        r.m2,
        r.m3,
        r.c,
        r.inertia,
        r.p0,
        c.z0,
        c.z_init.map_or("none".into(), |v| v.to_string())
    );
    let a = c.nominal.first().copied().unwrap_or_default();
    let _ = writeln!(s, "[actuators]\ncount = {}\nwn2 = {}\ntwo_zeta_wn = {}\n", c.nominal.len(), a.wn2, a.two_zeta_wn);
    let _ = writeln!(s, "[faults]\npreset = none\n");
    for (k, ev) in c.faults.events.iter().enumerate() {
        let _ = write!(
            s,
            "[fault.{}]\nactuator = {}\nt_on = {}\nt_off = {}\nwn2 = {}\ntwo_zeta_wn = {}\n",
            k + 1,
            ev.actuator + 1,
            ev.t_on,
            ev.t_off,
            ev.target.wn2,
            ev.target.two_zeta_wn
        );
        match ev.profile {
            FaultProfile::Abrupt => s.push_str("profile = abrupt\n\n"),
            FaultProfile::Ramp { ramp_time } => {
                let _ = writeln!(s, "profile = ramp\nramp_time = {ramp_time}\n");
            }
        }
    }
    let w = &c.wind;
    let trace = run.wind_trace.as_ref().map_or("none".into(), |p| p.display().to_string());
    let _ = writeln!(
        s,
        "[wind]\nw0 = {}\nw_min = {}\nw_max = {}\ntau_c = {}\nsigma = {}\nseed = {}\ntrace = {trace}\n",
        w.w0, w.w_min, w.w_max, w.tau_c, w.sigma, w.seed
    );
    let (h, l) = (&c.high, &c.low);
    let _ = writeln!(
        s,
        "[gains]\nk1 = {}\neta = {}\nl0 = {}\ngamma = {}\nalpha = {}\nh_bar_z = {}\nl_bar_w = {}\nk2 = {}\nalpha_l = {}\nlambda1 = {}\nlambda2 = {}\n",
        h.k1,
        h.eta,
        list(&h.l0),
        h.gamma,
        h.alpha,
        h.h_bar_z,
        h.l_bar_w,
        list(&l.k2),
        l.alpha_l,
        l.lambda1,
        l.lambda2
    );
    let e = &c.estimator;
    let d = &e.deviation;
    let _ = writeln!(
        s,
        "[estimator]\naf = {}\nmu0 = {}\nk0 = {}\np_init = {}\nwn2_nominal = {}\ntwo_zeta_wn_nominal = {}\nd_omega = {}\nd_zeta = {}\n",
        e.af, e.mu0, e.k0, e.p_init, d.wn2_0, d.tzw_0, d.d_w, d.d_z
    );
    let al = &c.allocator;
    let (mode, known) = match &al.mode {
        AllocatorMode::Splitter => ("splitter", None),
        AllocatorMode::Uniform => ("uniform", None),
        AllocatorMode::KnownFaultSet(v) => {
            ("known", Some(v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ")))
        }
    };
    let _ = writeln!(s, "[allocator]\nmode = {mode}");
    if let Some(k) = known {
        let _ = writeln!(s, "known_faulty = {k}");
    }
    let _ = writeln!(s, "tau = {}\ntau_off = {}\nhysteresis = {}\n", al.tau, al.tau_off, al.hysteresis);
    let _ = writeln!(s, "[excitation]\namplitude = {}\nfrequency = {}\n", c.excitation.amplitude, c.excitation.frequency);
    let m = &c.metrics;
    let _ = writeln!(s, "[metrics]\ne_tol = {}\nguard = {}\nrecovery_threshold = {}\n", m.e_tol, m.guard, m.recovery_threshold);
    let o = &run.output;
    let _ = writeln!(s, "[output]\ncsv = {}\nreport = {}\nsvg = {}", none(&o.csv), none(&o.report), o.svg);
    s
}
