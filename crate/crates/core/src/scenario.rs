//! Closed-loop assembly: plant, wind, estimator, splitter and controller
//! advanced together by one RK4 integrator.
//!
//! Per RK4 stage the loop evaluates, in order: fault parameters at the stage
//! time, deviation indicators from the current estimates, the allocation,
//! the control law, and all state derivatives. Wind is sampled once per
//! step and held over it. The faulty/healthy classification is refreshed at
//! the start of every step (so the optional hysteresis has a well-defined
//! memory), while the weights themselves follow the stage-level indicators.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::allocator::{split_with_classes, AllocatorMode, FaultClassifier};
use crate::controller::{check_k1, check_k2, filtered_error, HighLevelGains, K1Check, K2Check, LowLevelGains};
use crate::estimator::{
    deviation_indicator, enforce_positive_definite, estimator_deriv, filter_deriv, regressor,
    EstimatorConfig, FilterState,
};
use crate::metrics::{
    dissipation_residual, empirical_l2_gain, masked_max, rms, tracking_stats, RunMetrics, WindowStats,
};
use crate::ode::{Rk4, StateLayout, TimeGrid};
use crate::plant::{
    actuator_deriv, fault_params_at, fault_params_left_of, rotor_deriv, solve_operating_point,
    ActuatorParams, FaultSchedule, OperatingPoint, RotorParams,
};
use crate::wind::{WindConfig, WindGenerator, WindTrace};
use crate::{Error, Result};

/// Rotor speed below which a run is aborted, rad/s.
pub const MIN_ROTOR_SPEED: f64 = 0.05;

/// Trajectory table schema identifier.
pub const TRAJECTORY_SCHEMA: &str = "faultsim-trajectory/1";

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorConfig {
    pub mode: AllocatorMode,
    /// Classification threshold on Θ̌ (also the hysteresis upper edge).
    pub tau: f64,
    /// Hysteresis lower edge.
    pub tau_off: f64,
    pub hysteresis: bool,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        Self { mode: AllocatorMode::Splitter, tau: 0.02, tau_off: 0.01, hysteresis: false }
    }
}

/// Small zero-sum probing signal added to the actuator commands so the
/// regressors stay persistently exciting: `a·sin(ω t + 2π i/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationConfig {
    /// Amplitude in pitch-angle units; 0 disables the probe.
    pub amplitude: f64,
    /// rad/s.
    pub frequency: f64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self { amplitude: 0.5, frequency: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    /// Dissipation residuals are certified only where `‖e‖ < e_tol`.
    pub e_tol: f64,
    /// Seconds after each fault window excluded from certification.
    pub guard: f64,
    /// Rotor-speed band for recovery detection, rad/s.
    pub recovery_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { e_tol: 0.05, guard: 5.0, recovery_threshold: 0.005 }
    }
}

/// Everything one simulation run needs. Defaults reproduce the reference
/// experiment: third actuator faulty on [75, 125) s, mean wind 22 m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub rotor: RotorParams,
    /// Operating rotor speed, rad/s.
    pub z0: f64,
    /// Initial rotor speed; `None` starts at `z0`.
    pub z_init: Option<f64>,
    pub nominal: Vec<ActuatorParams>,
    pub faults: FaultSchedule,
    pub wind: WindConfig,
    pub wind_trace: Option<WindTrace>,
    pub high: HighLevelGains,
    pub low: LowLevelGains,
    pub estimator: EstimatorConfig,
    pub allocator: AllocatorConfig,
    pub excitation: ExcitationConfig,
    pub grid: TimeGrid,
    pub metrics: MetricsConfig,
    pub strict: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            rotor: RotorParams::default(),
            z0: 1.267,
            z_init: None,
            nominal: vec![ActuatorParams::NOMINAL; 3],
            faults: FaultSchedule::reference(),
            wind: WindConfig::default(),
            wind_trace: None,
            high: HighLevelGains::default(),
            low: LowLevelGains::default(),
            estimator: EstimatorConfig::default(),
            allocator: AllocatorConfig::default(),
            excitation: ExcitationConfig::default(),
            grid: TimeGrid { t0: 0.0, tf: 200.0, dt: 0.002 },
            metrics: MetricsConfig::default(),
            strict: false,
        }
    }
}

impl ScenarioConfig {
    pub fn n_actuators(&self) -> usize {
        self.nominal.len()
    }

    /// Checks every component invariant (not the gain conditions).
    pub fn validate(&self) -> Result<()> {
        let n = self.n_actuators();
        if n == 0 {
            return Err(Error::Config("at least one actuator is required".into()));
        }
        self.rotor.validate()?;
        if !(self.z0 > MIN_ROTOR_SPEED) {
            return Err(Error::Config(format!("z0 must exceed {MIN_ROTOR_SPEED}, got {}", self.z0)));
        }
        for a in &self.nominal {
            a.validate()?;
        }
        self.faults.validate(n)?;
        self.wind.validate()?;
        self.high.validate(n)?;
        self.low.validate(n)?;
        self.estimator.validate()?;
        self.grid.validate()?;
        let al = &self.allocator;
        if !(0.0..1.0).contains(&al.tau) || !(0.0..=al.tau).contains(&al.tau_off) {
            return Err(Error::Config(format!(
                "allocator thresholds must satisfy 0 <= tau_off <= tau < 1, got tau = {}, tau_off = {}",
                al.tau, al.tau_off
            )));
        }
        if let AllocatorMode::KnownFaultSet(set) = &al.mode {
            if let Some(i) = set.iter().find(|i| **i >= n) {
                return Err(Error::Config(format!("known fault set names actuator {} of {n}", i + 1)));
            }
        }
        if !(self.excitation.amplitude >= 0.0) || !(self.excitation.frequency >= 0.0) {
            return Err(Error::Config("excitation amplitude and frequency must be nonnegative".into()));
        }
        if !(self.metrics.e_tol > 0.0) || !(self.metrics.guard >= 0.0) || !(self.metrics.recovery_threshold > 0.0) {
            return Err(Error::Config("metrics tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Results of both gain sufficient conditions (low level at uniform β, nominal actuators).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainReport {
    pub k1: K1Check,
    pub k2: K2Check,
}

impl GainReport {
    pub fn all_satisfied(&self) -> bool {
        self.k1.satisfied && self.k2.satisfied
    }
}

pub fn certify_gains(cfg: &ScenarioConfig) -> Result<GainReport> {
    let n = cfg.n_actuators();
    let uniform = vec![1.0 / n as f64; n];
    Ok(GainReport {
        k1: check_k1(&cfg.high)?,
        k2: check_k2(&cfg.nominal, &uniform, &cfg.low.k2, cfg.low.alpha_l)?,
    })
}

/// Offsets of each block inside the flat closed-loop state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
}

impl Layout {
    pub const Z: usize = 0;
    pub const ZI: usize = 1;
    pub fn x(&self, i: usize) -> usize {
        2 + 2 * i
    }
    pub fn xf(&self, i: usize) -> usize {
        2 + 2 * self.n + 2 * i
    }
    pub fn uf(&self, i: usize) -> usize {
        2 + 4 * self.n + i
    }
    pub fn theta(&self, i: usize) -> usize {
        2 + 5 * self.n + 2 * i
    }
    pub fn gain(&self, i: usize) -> usize {
        2 + 7 * self.n + 4 * i
    }
    pub fn dim(&self) -> usize {
        2 + 11 * self.n
    }

    pub fn state_layout(&self) -> StateLayout {
        let mut names: Vec<String> = vec!["z".into(), "z_tilde_i".into()];
        for i in 1..=self.n {
            names.push(format!("x1_{i}"));
            names.push(format!("x2_{i}"));
        }
        for i in 1..=self.n {
            names.push(format!("x1f_{i}"));
            names.push(format!("x2f_{i}"));
        }
        names.extend((1..=self.n).map(|i| format!("uf_{i}")));
        for i in 1..=self.n {
            names.push(format!("wn2_hat_{i}"));
            names.push(format!("tzw_hat_{i}"));
        }
        for i in 1..=self.n {
            for rc in ["11", "12", "21", "22"] {
                names.push(format!("p{rc}_{i}"));
            }
        }
        StateLayout::new(names)
    }
}

/// Instantaneous closed-loop signals derived from a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Signals {
    pub rho: f64,
    pub e_norm: f64,
    pub theta_check: Vec<f64>,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: f64,
    pub phi_ref: f64,
}

/// Closed-loop vector field with scratch space for allocation-free stages.
pub struct ClosedLoop<'a> {
    cfg: &'a ScenarioConfig,
    op: OperatingPoint,
    layout: Layout,
    wind: f64,
    step_end: f64,
    flags: Vec<bool>,
    sig: Signals,
    e: Vec<f64>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let n = cfg.n_actuators();
        let op = solve_operating_point(&cfg.rotor, cfg.z0, cfg.wind.w0, n)?;
        Ok(Self {
            cfg,
            op,
            layout: Layout { n },
            wind: cfg.wind.w0,
            step_end: f64::INFINITY,
            flags: vec![false; n],
            sig: Signals {
                rho: 0.0,
                e_norm: 0.0,
                theta_check: vec![0.0; n],
                beta: vec![1.0 / n as f64; n],
                u: vec![0.0; n],
                phi: 0.0,
                phi_ref: 0.0,
            },
            e: vec![0.0; 2 * n],
        })
    }

    pub fn operating_point(&self) -> &OperatingPoint {
        &self.op
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Initial state: plant at the operating point, filters at rest,
    /// estimates at nominal, gain matrices `p_init·I`.
    pub fn initial_state(&self) -> Vec<f64> {
        let l = self.layout;
        let mut s = vec![0.0; l.dim()];
        s[Layout::Z] = self.cfg.z_init.unwrap_or(self.cfg.z0);
        for i in 0..l.n {
            s[l.x(i)] = self.op.x0[2 * i];
            s[l.xf(i)] = self.op.x0[2 * i];
            s[l.uf(i)] = self.op.u0_offset[i];
            let nom = self.cfg.nominal[i];
            s[l.theta(i)] = nom.wn2;
            s[l.theta(i) + 1] = nom.two_zeta_wn;
            let p = self.cfg.estimator.p_init;
            s[l.gain(i)..l.gain(i) + 4].copy_from_slice(&[p, 0.0, 0.0, p]);
        }
        s
    }

    /// Sets the wind held over the next step and the step's end time.
    pub fn begin_step(&mut self, wind: f64, step_end: f64, state: &[f64]) {
        self.wind = wind;
        self.step_end = step_end;
        let l = self.layout;
        let dev = &self.cfg.estimator.deviation;
        let checks: Vec<f64> = (0..l.n)
            .map(|i| deviation_indicator([state[l.theta(i)], state[l.theta(i) + 1]], dev))
            .collect();
        let al = &self.cfg.allocator;
        match &al.mode {
            AllocatorMode::Splitter => {
                // the classifier is rebuilt from the stored flags each step
                let mut c = FaultClassifier::new(l.n, al.tau, al.tau_off, al.hysteresis);
                if al.hysteresis {
                    c = c.with_flags(&self.flags);
                }
                self.flags.copy_from_slice(c.update(&checks));
            }
            AllocatorMode::KnownFaultSet(set) => {
                for (i, f) in self.flags.iter_mut().enumerate() {
                    *f = set.contains(&i);
                }
            }
            AllocatorMode::Uniform => self.flags.iter_mut().for_each(|f| *f = false),
        }
    }

    fn probe(&self, t: f64, i: usize) -> f64 {
        let ex = &self.cfg.excitation;
        if ex.amplitude == 0.0 {
            return 0.0;
        }
        let phase = core::f64::consts::TAU * i as f64 / self.layout.n as f64;
        ex.amplitude * libm::sin(ex.frequency * t + phase)
    }

    fn update_signals(&mut self, t: f64, s: &[f64]) -> Result<()> {
        let l = self.layout;
        let cfg = self.cfg;
        let g = &cfg.high;
        let rho = filtered_error(s[Layout::Z], cfg.z0, s[Layout::ZI], g.eta);
        let mut phi_ref = 0.0;
        for i in 0..l.n {
            let off = g.k1 * g.l0[i] * rho;
            self.e[2 * i] = s[l.x(i)] - self.op.x0[2 * i] + off;
            self.e[2 * i + 1] = s[l.x(i) + 1] - self.op.x0[2 * i + 1];
            let y_ref = self.op.y0[i] - off;
            phi_ref += y_ref * y_ref;
            self.sig.theta_check[i] =
                deviation_indicator([s[l.theta(i)], s[l.theta(i) + 1]], &cfg.estimator.deviation);
        }
        let n = l.n;
        match cfg.allocator.mode {
            AllocatorMode::Uniform => self.sig.beta.iter_mut().for_each(|b| *b = 1.0 / n as f64),
            _ => {
                let a = split_with_classes(&self.sig.theta_check, &self.flags, cfg.allocator.tau)?;
                self.sig.beta.copy_from_slice(&a.beta);
            }
        }
        let scalar: f64 = cfg.low.k2.iter().zip(&self.e).map(|(k, e)| k * e).sum();
        for i in 0..n {
            self.sig.u[i] = self.op.u0_offset[i] - self.sig.beta[i] * scalar + self.probe(t, i);
        }
        self.sig.rho = rho;
        self.sig.e_norm = libm::sqrt(self.e.iter().map(|v| v * v).sum());
        self.sig.phi = (0..n).map(|i| s[l.x(i)] * s[l.x(i)]).sum();
        self.sig.phi_ref = phi_ref;
        Ok(())
    }

    /// Signals at `(t, s)` using the classification of the current step.
    pub fn signals(&mut self, t: f64, s: &[f64]) -> Result<&Signals> {
        self.update_signals(t, s)?;
        Ok(&self.sig)
    }

    fn actuator_params(&self, t: f64, i: usize) -> ActuatorParams {
        let nominal = self.cfg.nominal[i];
        // the final stage of a step ending on an event instant sees the left limit
        if t >= self.step_end - 0.25 * self.cfg.grid.dt {
            fault_params_left_of(t, &self.cfg.faults, nominal, i)
        } else {
            fault_params_at(t, &self.cfg.faults, nominal, i)
        }
    }

    /// Closed-loop vector field.
    pub fn deriv(&mut self, t: f64, s: &[f64], ds: &mut [f64]) -> Result<()> {
        let z = s[Layout::Z];
        if !(z > MIN_ROTOR_SPEED) {
            return Err(Error::Singularity { z });
        }
        self.update_signals(t, s)?;
        let l = self.layout;
        let cfg = self.cfg;
        ds[Layout::Z] = rotor_deriv(z, self.wind, self.sig.phi, &cfg.rotor)?;
        ds[Layout::ZI] = z - cfg.z0;
        let est = &cfg.estimator;
        for i in 0..l.n {
            let x = [s[l.x(i)], s[l.x(i) + 1]];
            let u = self.sig.u[i];
            let dx = actuator_deriv(x, u, &self.actuator_params(t, i));
            ds[l.x(i)] = dx[0];
            ds[l.x(i) + 1] = dx[1];

            let fs = FilterState { x1f: s[l.xf(i)], x2f: s[l.xf(i) + 1], uf: s[l.uf(i)] };
            let df = filter_deriv(x, u, &fs, est.af);
            ds[l.xf(i)] = df[0];
            ds[l.xf(i) + 1] = df[1];
            ds[l.uf(i)] = df[2];

            let (y, x_check) = regressor(&fs, x[1], est.af);
            let theta = [s[l.theta(i)], s[l.theta(i) + 1]];
            let g0 = l.gain(i);
            let p = [s[g0], s[g0 + 1], s[g0 + 2], s[g0 + 3]];
            let (dth, dp) = estimator_deriv(theta, &p, y, x_check, est.mu0, est.k0);
            ds[l.theta(i)] = dth[0];
            ds[l.theta(i) + 1] = dth[1];
            ds[g0..g0 + 4].copy_from_slice(&dp);
        }
        Ok(())
    }
}

/// Column-oriented record of a run, one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    header: Vec<String>,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, data: Vec::new() }
    }

    /// Standard header for `n` actuators.
    pub fn standard_header(n: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t", "w", "z", "rho", "z_tilde_i"].iter().map(|s| s.to_string()).collect();
        for i in 1..=n {
            for name in ["x1", "x2", "u", "beta", "wn2_hat", "tzw_hat", "theta_check"] {
                h.push(format!("{name}_{i}"));
            }
        }
        h.extend(["phi", "phi_ref", "e_norm"].iter().map(|s| s.to_string()));
        h
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    pub fn n_rows(&self) -> usize {
        if self.header.is_empty() {
            0
        } else {
            self.data.len() / self.header.len()
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols() {
            return Err(Error::Contract(format!("row has {} values, header {}", row.len(), self.n_cols())));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[k * c..(k + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols().max(1))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows().map(|r| r[j]).collect())
    }

    /// Number of actuators implied by the `beta_i` columns.
    pub fn n_actuators(&self) -> usize {
        (1..).take_while(|i| self.column_index(&format!("beta_{i}")).is_some()).count()
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub metrics: RunMetrics,
    pub operating_point: OperatingPoint,
    pub gains: GainReport,
    /// Non-fatal diagnostics (gain warnings, gain-matrix projections).
    pub warnings: Vec<String>,
    pub state_layout: Arc<StateLayout>,
    pub final_state: Vec<f64>,
}

fn record(cl: &mut ClosedLoop, t: f64, w: f64, s: &[f64], traj: &mut Trajectory, row: &mut Vec<f64>) -> Result<()> {
    let l = cl.layout();
    row.clear();
    row.extend_from_slice(&[t, w, s[Layout::Z]]);
    let sig = cl.signals(t, s)?;
    row.push(sig.rho);
    row.push(s[Layout::ZI]);
    for i in 0..l.n {
        row.extend_from_slice(&[
            s[l.x(i)],
            s[l.x(i) + 1],
            sig.u[i],
            sig.beta[i],
            s[l.theta(i)],
            s[l.theta(i) + 1],
            sig.theta_check[i],
        ]);
    }
    row.extend_from_slice(&[sig.phi, sig.phi_ref, sig.e_norm]);
    traj.push_row(row)
}

/// Runs one scenario end to end: gain certification, integration, metrics.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let gains = certify_gains(cfg)?;
    let mut warnings = Vec::new();
    if !gains.k1.satisfied {
        let msg = format!("k1 = {} below the sufficient threshold {:.6}", cfg.high.k1, gains.k1.threshold);
        if cfg.strict {
            return Err(Error::GainCheck(msg));
        }
        warnings.push(msg);
    }
    if !gains.k2.satisfied {
        let msg = format!("low-level certificate not met: max eigenvalue {:.6} > 0", gains.k2.max_eig);
        if cfg.strict {
            return Err(Error::GainCheck(msg));
        }
        warnings.push(msg);
    }

    let mut cl = ClosedLoop::new(cfg)?;
    let l = cl.layout();
    let grid = cfg.grid;
    let mut state = cl.initial_state();
    let mut traj = Trajectory::new(Trajectory::standard_header(l.n));
    let mut row = Vec::with_capacity(traj.n_cols());
    let mut rk = Rk4::new(l.dim());
    let mut wind = WindGenerator::new(cfg.wind);
    let wind_at = |k: usize, gen: &WindGenerator| match &cfg.wind_trace {
        Some(tr) => tr.sample(grid.time(k)),
        None => gen.current(),
    };
    let mut projections = 0usize;

    for k in 0..grid.steps() {
        let t = grid.time(k);
        let w = wind_at(k, &wind);
        cl.begin_step(w, grid.time(k + 1), &state);
        record(&mut cl, t, w, &state, &mut traj, &mut row)?;
        let before = state.clone();
        if let Err(err) = rk.step(&mut |tt, s: &[f64], ds: &mut [f64]| cl.deriv(tt, s, ds), t, grid.dt, &mut state) {
            return Err(match err {
                Error::IntegrationFailure { t, index, .. } => {
                    Error::IntegrationFailure { t, index, last_valid: Some(before) }
                }
                other => other,
            });
        }
        for i in 0..l.n {
            let g0 = l.gain(i);
            let mut p = [state[g0], state[g0 + 1], state[g0 + 2], state[g0 + 3]];
            if enforce_positive_definite(&mut p) {
                projections += 1;
                if projections <= 10 {
                    warnings.push(format!("gain matrix {} projected to positive definite at t = {}", i + 1, grid.time(k + 1)));
                }
            }
            state[g0..g0 + 4].copy_from_slice(&p);
        }
        wind.advance(grid.dt);
    }
    let k_last = grid.steps();
    let w = wind_at(k_last, &wind);
    cl.begin_step(w, f64::INFINITY, &state);
    record(&mut cl, grid.time(k_last), w, &state, &mut traj, &mut row)?;

    let metrics = compute_metrics(&traj, cfg, projections)?;
    Ok(RunOutput {
        trajectory: traj,
        metrics,
        operating_point: cl.operating_point().clone(),
        gains,
        warnings,
        state_layout: Arc::new(l.state_layout()),
        final_state: state,
    })
}

fn col(traj: &Trajectory, name: &str) -> Result<Vec<f64>> {
    traj.column(name).ok_or_else(|| Error::Contract(format!("trajectory lacks column {name}")))
}

/// Metrics of a recorded trajectory under `cfg`.
pub fn compute_metrics(traj: &Trajectory, cfg: &ScenarioConfig, pd_projections: usize) -> Result<RunMetrics> {
    let dt = cfg.grid.dt;
    let t = col(traj, "t")?;
    let z = col(traj, "z")?;
    let rho = col(traj, "rho")?;
    let zi = col(traj, "z_tilde_i")?;
    let e_norm = col(traj, "e_norm")?;
    let phi_err: Vec<f64> = col(traj, "phi")?.iter().zip(col(traj, "phi_ref")?).map(|(a, b)| a - b).collect();
    let w_tilde: Vec<f64> = col(traj, "w")?.iter().map(|w| w - cfg.wind.w0).collect();

    let l2_gain_emp = match empirical_l2_gain(&rho, &w_tilde, dt) {
        Ok(g) => Some(g),
        Err(Error::UndefinedGain) => None,
        Err(e) => return Err(e),
    };
    let residual = dissipation_residual(&rho, &zi, &w_tilde, cfg.high.gamma, cfg.high.eta, dt);
    let excluded = |tk: f64| cfg.faults.windows().any(|(on, off)| tk >= on && tk < off + cfg.metrics.guard);
    let certified = |k: usize| e_norm[k] < cfg.metrics.e_tol && !excluded(t[k]);
    let dissipation_samples = (0..t.len()).filter(|k| certified(*k)).count();
    let max_dissipation_residual = masked_max(&residual, certified);
    let max_all = masked_max(&residual, |_| true).unwrap_or(0.0);

    let first_fault = cfg.faults.windows().map(|(on, _)| on).reduce(f64::min);
    let st = tracking_stats(&t, &z, cfg.z0, cfg.metrics.recovery_threshold, first_fault);

    let fault_window_stats = cfg
        .faults
        .windows()
        .map(|(on, off)| {
            let idx: Vec<usize> = (0..t.len()).filter(|k| t[*k] >= on && t[*k] < off).collect();
            let pick = |v: &[f64]| idx.iter().map(|k| v[*k]).collect::<Vec<_>>();
            let dz: Vec<f64> = pick(&z).iter().map(|v| v - cfg.z0).collect();
            WindowStats {
                t_on: on,
                t_off: off,
                z_max_dev: dz.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                z_rms_dev: rms(&dz),
                phi_track_rms: rms(&pick(&phi_err)),
                max_dissipation_residual: pick(&residual).into_iter().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    Ok(RunMetrics {
        l2_gain_emp,
        max_dissipation_residual,
        dissipation_samples,
        max_dissipation_residual_all: max_all,
        z_rms_dev: st.rms,
        z_max_dev: st.max_dev,
        phi_track_rms: rms(&phi_err),
        phi_recovery_time: st.recovery_time,
        fault_window_stats,
        pd_projections,
    })
}
