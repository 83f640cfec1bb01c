//! The splitter: deviation indicators → simplex-constrained input weights.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Tolerance on `Σβ = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub beta: Vec<f64>,
    /// Number of actuators classified faulty.
    pub q: usize,
    pub tau: f64,
}

/// How the high-level command is shared among actuators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AllocatorMode {
    /// Indicators classified against a threshold, then split.
    #[default]
    Splitter,
    /// β pinned at `1/n` (ablation baseline).
    Uniform,
    /// Faulty set fixed a priori (zero-based indices); weights still use Θ̌.
    KnownFaultSet(Vec<usize>),
}

fn check_indicators(theta_check: &[f64]) -> Result<()> {
    if theta_check.is_empty() {
        return Err(Error::Contract("splitter needs at least one actuator".into()));
    }
    if let Some((i, v)) = theta_check.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Contract(format!("deviation indicator {} = {v} outside [0, 1]", i + 1)));
    }
    Ok(())
}

/// Splits with an explicit faulty set. Faulty agents get `(1 − Θ̌i)/n`,
/// healthy ones `(1 + ΣΘ̌faulty/(n − q))/n`; all-faulty falls back to uniform.
pub fn split_with_classes(theta_check: &[f64], faulty: &[bool], tau: f64) -> Result<Allocation> {
    check_indicators(theta_check)?;
    if faulty.len() != theta_check.len() {
        return Err(Error::Contract("classification length mismatch".into()));
    }
    let n = theta_check.len();
    let q = faulty.iter().filter(|f| **f).count();
    let inv_n = 1.0 / n as f64;
    if q == n || q == 0 {
        return Ok(Allocation { beta: vec![inv_n; n], q, tau });
    }
    let shed: f64 = theta_check.iter().zip(faulty).filter(|(_, f)| **f).map(|(v, _)| v).sum();
    let healthy = inv_n * (1.0 + shed / (n - q) as f64);
    let beta = theta_check
        .iter()
        .zip(faulty)
        .map(|(v, f)| if *f { inv_n * (1.0 - v) } else { healthy })
        .collect();
    Ok(Allocation { beta, q, tau })
}

/// Splitter with threshold classification: agent `i` is faulty iff `Θ̌i > tau`.
pub fn split(theta_check: &[f64], tau: f64) -> Result<Allocation> {
    let faulty: Vec<bool> = theta_check.iter().map(|v| *v > tau).collect();
    split_with_classes(theta_check, &faulty, tau)
}

/// True iff `beta` is entrywise in `[0, 1]` and sums to one.
pub fn simplex_check(beta: &[f64]) -> bool {
    !beta.is_empty()
        && beta.iter().all(|b| (0.0..=1.0).contains(b))
        && (beta.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// Threshold classifier with an optional hysteresis band.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultClassifier {
    pub tau_on: f64,
    pub tau_off: f64,
    pub hysteresis: bool,
    flags: Vec<bool>,
}

impl FaultClassifier {
    pub fn new(n: usize, tau_on: f64, tau_off: f64, hysteresis: bool) -> Self {
        Self { tau_on, tau_off, hysteresis, flags: vec![false; n] }
    }

    /// Restores a previous classification (for carrying hysteresis memory).
    pub fn with_flags(mut self, flags: &[bool]) -> Self {
        self.flags.copy_from_slice(flags);
        self
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Reclassifies from fresh indicators. Without hysteresis the rule is
    /// `Θ̌ > tau_on`; with it a faulty agent stays faulty until `Θ̌ ≤ tau_off`.
    pub fn update(&mut self, theta_check: &[f64]) -> &[bool] {
        for (flag, v) in self.flags.iter_mut().zip(theta_check) {
            *flag = if self.hysteresis && *flag { *v > self.tau_off } else { *v > self.tau_on };
        }
        &self.flags
    }
}
