//! Fixed-step fourth-order Runge–Kutta integration.
//!
//! Every continuous state of the closed loop (plant, filters, estimator)
//! lives in one flat vector advanced by [`Rk4`], so there is exactly one
//! time base. Steps are fixed so that scheduled events fall on grid points.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Immutable name → index map for a [`StateVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    names: Vec<String>,
}

impl StateLayout {
    pub fn new(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Labelled state vector with a length fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    layout: Arc<StateLayout>,
}

impl StateVector {
    pub fn new(layout: Arc<StateLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Contract(alloc::format!(
                "state has {} values but layout names {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Self { values, layout })
    }

    /// Unlabelled vector; entries are named `x0`, `x1`, ...
    pub fn from_values(values: Vec<f64>) -> Self {
        let names = (0..values.len()).map(|i| alloc::format!("x{i}")).collect();
        Self { values, layout: Arc::new(StateLayout::new(names)) }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &Arc<StateLayout> {
        &self.layout
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.layout.index_of(name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Uniform simulation grid `t0, t0 + dt, ..., tf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, dt: f64) -> Result<Self> {
        let grid = Self { t0, tf, dt };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(alloc::format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tf > self.t0) {
            return Err(Error::Config(alloc::format!(
                "tf ({}) must exceed t0 ({})",
                self.tf,
                self.t0
            )));
        }
        let ratio = (self.tf - self.t0) / self.dt;
        if libm::fabs(ratio - libm::round(ratio)) > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(alloc::format!(
                "horizon {} is not an integer multiple of dt = {}",
                self.tf - self.t0,
                self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        libm::round((self.tf - self.t0) / self.dt) as usize
    }

    /// Time of grid point `k`, computed by multiplication so no drift accumulates.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        libm::round((t - self.t0) / self.dt).max(0.0) as usize
    }
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::IntegrationFailure { t, index, last_valid: None }),
        None => Ok(()),
    }
}

/// Scratch buffers for allocation-free RK4 steps on a fixed dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    /// Advances `x` in place from `t` to `t + dt`. On error `x` is untouched.
    pub fn step<F>(&mut self, deriv: &mut F, t: f64, dt: f64, x: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        if !(dt > 0.0) {
            return Err(Error::Contract(alloc::format!("dt must be positive, got {dt}")));
        }
        if x.len() != self.dim() {
            return Err(Error::Contract(alloc::format!(
                "state dimension {} does not match workspace {}",
                x.len(),
                self.dim()
            )));
        }
        let half = 0.5 * dt;

        deriv(t, x, &mut self.k1)?;
        check_finite(t, &self.k1)?;

        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *tmp = xi + half * k;
        }
        deriv(t + half, &self.tmp, &mut self.k2)?;
        check_finite(t + half, &self.k2)?;

        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *tmp = xi + half * k;
        }
        deriv(t + half, &self.tmp, &mut self.k3)?;
        check_finite(t + half, &self.k3)?;

        for ((tmp, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *tmp = xi + dt * k;
        }
        deriv(t + dt, &self.tmp, &mut self.k4)?;
        check_finite(t + dt, &self.k4)?;

        let sixth = dt / 6.0;
        let stages = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for ((tmp, xi), (((a, b), c), d)) in self.tmp.iter_mut().zip(x.iter()).zip(stages) {
            *tmp = xi + sixth * (a + 2.0 * b + 2.0 * c + d);
        }
        check_finite(t + dt, &self.tmp)?;
        x.copy_from_slice(&self.tmp);
        Ok(())
    }
}

/// One classic RK4 step of `x` from `t` to `t + dt`.
pub fn rk4_step<F>(deriv: &mut F, x: &StateVector, t: f64, dt: f64) -> Result<StateVector>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut out = x.clone();
    Rk4::new(x.len()).step(deriv, t, dt, out.values_mut())?;
    Ok(out)
}

/// Sampled solution of an integration: one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub layout: Arc<StateLayout>,
    pub times: Vec<f64>,
    data: Vec<f64>,
}

impl Solution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        let n = self.layout.len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.data.chunks_exact(self.layout.len()))
    }
}

/// Integrates `deriv` over `grid` from `x0`, calling `observer(k, t, x)` after
/// every accepted step `k = 1..=steps`.
pub fn integrate<F, O>(
    mut deriv: F,
    x0: &StateVector,
    grid: &TimeGrid,
    mut observer: O,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(usize, f64, &[f64]),
{
    grid.validate()?;
    check_finite(grid.t0, x0.values())?;
    let steps = grid.steps();
    let n = x0.len();
    let mut data = Vec::with_capacity((steps + 1) * n);
    let mut times = Vec::with_capacity(steps + 1);
    data.extend_from_slice(x0.values());
    times.push(grid.t0);

    let mut rk = Rk4::new(n);
    let mut x = x0.values().to_vec();
    for k in 0..steps {
        let t = grid.time(k);
        if let Err(err) = rk.step(&mut deriv, t, grid.dt, &mut x) {
            return Err(match err {
                Error::IntegrationFailure { t, index, .. } => {
                    Error::IntegrationFailure { t, index, last_valid: Some(x) }
                }
                other => other,
            });
        }
        let t_next = grid.time(k + 1);
        data.extend_from_slice(&x);
        times.push(t_next);
        observer(k + 1, t_next, &x);
    }
    Ok(Solution { layout: x0.layout().clone(), times, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        dx[0] = -x[0];
        Ok(())
    }

    #[test]
    fn zero_derivative_keeps_state() {
        let x = StateVector::from_values(vec![5.0]);
        let out = rk4_step(&mut |_, _: &[f64], dx: &mut [f64]| {
            dx[0] = 0.0;
            Ok(())
        }, &x, 0.0, 0.1)
        .unwrap();
        assert_eq!(out.values(), &[5.0]);
    }

    #[test]
    fn decay_step_matches_taylor_polynomial() {
        let h: f64 = 0.1;
        let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        let out = rk4_step(&mut decay, &StateVector::from_values(vec![1.0]), 0.0, h).unwrap();
        assert!((out.values()[0] - taylor).abs() < 1e-15);
        assert!((out.values()[0] - 0.9048375).abs() < 1e-7);
    }

    #[test]
    fn non_finite_derivative_reports_time_and_index() {
        let x = StateVector::from_values(vec![1.0, 2.0]);
        let err = rk4_step(&mut |_, _: &[f64], dx: &mut [f64]| {
            dx[0] = 0.0;
            dx[1] = f64::NAN;
            Ok(())
        }, &x, 3.0, 0.1)
        .unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure { t, index: 1, .. } if t == 3.0));
    }

    #[test]
    fn integrate_attaches_last_valid_state() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let err = integrate(
            |t, x: &[f64], dx: &mut [f64]| {
                dx[0] = if t > 0.45 { f64::INFINITY } else { x[0] };
                Ok(())
            },
            &StateVector::from_values(vec![1.0]),
            &grid,
            |_, _, _| {},
        )
        .unwrap_err();
        match err {
            Error::IntegrationFailure { last_valid: Some(x), .. } => assert!(x[0] > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_rejects_bad_horizons() {
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.3).is_err());
        assert_eq!(TimeGrid::new(0.0, 200.0, 0.002).unwrap().steps(), 100_000);
    }

    #[test]
    fn layout_lookup() {
        let layout = Arc::new(StateLayout::new(vec!["z".into(), "zi".into()]));
        let x = StateVector::new(layout, vec![1.5, 0.0]).unwrap();
        assert_eq!(x.get("z"), Some(1.5));
        assert_eq!(x.get("nope"), None);
        assert!(StateVector::new(x.layout().clone(), vec![1.0]).is_err());
    }
}
