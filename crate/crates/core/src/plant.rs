//! Lumped rotor dynamics, second-order pitch actuators and fault injection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::quadratic_max_real_root;
use crate::{Error, Result};

/// Sign of the pitch coupling term in the rotor equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSign {
    /// `ż = f − g·φ`: pitching out decelerates the rotor.
    Subtract,
    /// `ż = f + g·φ`, kept only for auditing the alternative reading.
    Add,
}

impl CouplingSign {
    pub fn factor(self) -> f64 {
        match self {
            CouplingSign::Subtract => -1.0,
            CouplingSign::Add => 1.0,
        }
    }
}

/// Constants of the lumped rotor model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub c: f64,
    /// Drive-train inertia, kg·m².
    pub inertia: f64,
    /// Rated mechanical power, W.
    pub p0: f64,
    pub coupling: CouplingSign,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            m1: 5.4184,
            m2: 0.0682,
            m3: 0.029,
            c: 9.6e5,
            inertia: 43_784_700.0,
            p0: 5_296_610.0,
            coupling: CouplingSign::Subtract,
        }
    }
}

impl RotorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
            ("c", self.c),
            ("J", self.inertia),
            ("P0", self.p0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("rotor.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `(ωn², 2ζωn)` of one pitch actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    pub wn2: f64,
    pub two_zeta_wn: f64,
}

impl ActuatorParams {
    pub const NOMINAL: Self = Self { wn2: 123.4321, two_zeta_wn: 13.332 };
    /// Hydraulic pressure-drop fault; sits exactly one deviation span from nominal.
    pub const FAULT_TARGET: Self = Self { wn2: 11.6964, two_zeta_wn: 3.078 };

    pub fn new(wn2: f64, two_zeta_wn: f64) -> Result<Self> {
        let p = Self { wn2, two_zeta_wn };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wn2 > 0.0) || !(self.two_zeta_wn > 0.0) {
            return Err(Error::Config(format!(
                "actuator parameters must be positive, got wn2 = {}, two_zeta_wn = {}",
                self.wn2, self.two_zeta_wn
            )));
        }
        Ok(())
    }

    /// Largest real part of the eigenvalues of `[[0, 1], [−ωn², −2ζωn]]`.
    pub fn max_real_eigenvalue(&self) -> f64 {
        quadratic_max_real_root(self.two_zeta_wn, self.wn2)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.wn2, self.two_zeta_wn]
    }

    fn lerp(a: Self, b: Self, s: f64) -> Self {
        Self {
            wn2: (1.0 - s) * a.wn2 + s * b.wn2,
            two_zeta_wn: (1.0 - s) * a.two_zeta_wn + s * b.two_zeta_wn,
        }
    }
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self::NOMINAL
    }
}

/// How a fault moves the parameters away from nominal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultProfile {
    Abrupt,
    /// Linear blend from nominal to target over `ramp_time` seconds after onset.
    Ramp { ramp_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultEvent {
    /// Zero-based actuator index.
    pub actuator: usize,
    pub t_on: f64,
    pub t_off: f64,
    pub target: ActuatorParams,
    pub profile: FaultProfile,
}

impl FaultEvent {
    /// Parameters of this event's actuator at time `s` seconds after onset.
    fn blend(&self, nominal: ActuatorParams, since_onset: f64) -> ActuatorParams {
        match self.profile {
            FaultProfile::Abrupt => self.target,
            FaultProfile::Ramp { ramp_time } => {
                let s = (since_onset / ramp_time).clamp(0.0, 1.0);
                ActuatorParams::lerp(nominal, self.target, s)
            }
        }
    }
}

/// Scheduled actuator faults. Each event is active on `[t_on, t_off)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultSchedule {
    pub events: Vec<FaultEvent>,
}

impl FaultSchedule {
    /// Third actuator fails abruptly at 75 s and recovers at 125 s.
    pub fn reference() -> Self {
        Self {
            events: vec![FaultEvent {
                actuator: 2,
                t_on: 75.0,
                t_off: 125.0,
                target: ActuatorParams::FAULT_TARGET,
                profile: FaultProfile::Abrupt,
            }],
        }
    }

    pub fn validate(&self, n_actuators: usize) -> Result<()> {
        for (k, ev) in self.events.iter().enumerate() {
            if ev.actuator >= n_actuators {
                return Err(Error::Config(format!(
                    "fault {k}: actuator {} out of range 1..={n_actuators}",
                    ev.actuator + 1
                )));
            }
            if !(ev.t_on < ev.t_off) {
                return Err(Error::Config(format!(
                    "fault {k}: t_on ({}) must precede t_off ({})",
                    ev.t_on, ev.t_off
                )));
            }
            if let FaultProfile::Ramp { ramp_time } = ev.profile {
                if !(ramp_time > 0.0) {
                    return Err(Error::Config(format!("fault {k}: ramp time must be positive")));
                }
            }
            ev.target.validate()?;
            for other in &self.events[..k] {
                if other.actuator == ev.actuator && ev.t_on < other.t_off && other.t_on < ev.t_off {
                    return Err(Error::Config(format!(
                        "fault {k} overlaps an earlier event on actuator {}",
                        ev.actuator + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Intervals `[t_on, t_off)` of all events.
    pub fn windows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.events.iter().map(|e| (e.t_on, e.t_off))
    }
}

/// Parameters of actuator `i` at time `t` (right-continuous at event instants).
pub fn fault_params_at(
    t: f64,
    schedule: &FaultSchedule,
    nominal: ActuatorParams,
    i: usize,
) -> ActuatorParams {
    schedule
        .events
        .iter()
        .find(|e| e.actuator == i && e.t_on <= t && t < e.t_off)
        .map_or(nominal, |e| e.blend(nominal, t - e.t_on))
}

/// Left limit of [`fault_params_at`] at `t`: events are active on `(t_on, t_off]`.
///
/// Used for the last RK4 stage of a step ending on an event instant.
pub fn fault_params_left_of(
    t: f64,
    schedule: &FaultSchedule,
    nominal: ActuatorParams,
    i: usize,
) -> ActuatorParams {
    schedule
        .events
        .iter()
        .find(|e| e.actuator == i && e.t_on < t && t <= e.t_off)
        .map_or(nominal, |e| e.blend(nominal, t - e.t_on))
}

fn check_speed(z: f64) -> Result<()> {
    if z > 0.0 {
        Ok(())
    } else {
        Err(Error::Singularity { z })
    }
}

/// Aerodynamic drive term `f(z, w)`, rad/s².
pub fn f_aero(z: f64, w: f64, p: &RotorParams) -> Result<f64> {
    check_speed(z)?;
    let jz = p.inertia * z;
    let tsr = w / z;
    Ok(p.c * w * w * w / (2.0 * jz) * (tsr - p.m1) * libm::exp(-p.m2 * tsr) - p.p0 / jz)
}

/// Pitch effectiveness `g(z, w)`, rad/s² per unit of φ.
pub fn g_aero(z: f64, w: f64, p: &RotorParams) -> Result<f64> {
    check_speed(z)?;
    Ok(p.c * w * w * w / (6.0 * p.inertia * z) * p.m3 * libm::exp(-p.m2 * w / z))
}

/// Coupling function: squared Euclidean norm of the pitch angles.
pub fn phi(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

/// Rotor acceleration `f ∓ g·φ`.
pub fn rotor_deriv(z: f64, w: f64, phi_val: f64, p: &RotorParams) -> Result<f64> {
    Ok(f_aero(z, w, p)? + p.coupling.factor() * g_aero(z, w, p)? * phi_val)
}

/// `[rate, accel]` of a pitch actuator tracking commanded angle `u`.
pub fn actuator_deriv(x: [f64; 2], u: f64, theta: &ActuatorParams) -> [f64; 2] {
    [x[1], -theta.wn2 * x[0] - theta.two_zeta_wn * x[1] + theta.wn2 * u]
}

/// Equilibrium of the rotor with a symmetric pitch split.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub z0: f64,
    pub w0: f64,
    /// Per-actuator pitch angle at equilibrium.
    pub y0: Vec<f64>,
    /// Full actuator state `[y0_1, 0, y0_2, 0, ...]`.
    pub x0: Vec<f64>,
    /// Feed-forward `−φi(x0i)` entering the low-level control.
    pub u0_offset: Vec<f64>,
}

impl OperatingPoint {
    pub fn n_actuators(&self) -> usize {
        self.y0.len()
    }
}

/// Solves `f(z0, w0) − g(z0, w0)·φ(y0) = 0` with equal pitch on all `n` actuators.
pub fn solve_operating_point(p: &RotorParams, z0: f64, w0: f64, n: usize) -> Result<OperatingPoint> {
    if n == 0 {
        return Err(Error::Contract("at least one actuator is required".into()));
    }
    let f = f_aero(z0, w0, p)?;
    let g = g_aero(z0, w0, p)?;
    // φ0 must be nonnegative: −sign·f/g
    let phi0 = -f / (p.coupling.factor() * g);
    if !(g > 0.0) || !(phi0 > 0.0) || !phi0.is_finite() {
        return Err(Error::NoOperatingPoint { f, g });
    }
    let yi = libm::sqrt(phi0 / n as f64);
    let y0 = vec![yi; n];
    let mut x0 = vec![0.0; 2 * n];
    for (i, y) in y0.iter().enumerate() {
        x0[2 * i] = *y;
    }
    // A_i x0i = [0, −ωn²·y0i] = φi(x0i)·b_i with b_i = [0, ωn²] ⇒ φi = −y0i
    let u0_offset = y0.clone();
    Ok(OperatingPoint { z0, w0, y0, x0, u0_offset })
}
