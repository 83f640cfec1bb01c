//! Filtered-regression least squares with bounded-gain forgetting.
//!
//! Each actuator `ẍ = −ωn²·x1 − 2ζωn·x2 + ωn²·u` is passed through
//! `H(s) = af/(s + af)`, which yields the measurable linear regression
//! `af·(x2 − x2f) = [uf − x1f, −x2f]·[ωn², 2ζωn]ᵀ`. The estimate is driven by
//! the innovation `x̌ − Y·θ̂`, which equals `Y·θ̃` along exact trajectories.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::sym2_eigenvalues;
use crate::ode::{integrate, StateVector, TimeGrid};
use crate::plant::{actuator_deriv, ActuatorParams};
use crate::{Error, Result};

/// Smallest admissible eigenvalue of a gain matrix before projection.
pub const MIN_GAIN_EIGENVALUE: f64 = 1e-8;

/// Normalisation of the deviation indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationConfig {
    pub wn2_0: f64,
    pub tzw_0: f64,
    pub d_w: f64,
    pub d_z: f64,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        Self { wn2_0: 123.4321, tzw_0: 13.332, d_w: 111.7357, d_z: 10.254 }
    }
}

impl DeviationConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.wn2_0, self.tzw_0, self.d_w, self.d_z].iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("deviation normalisers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Filter cutoff, rad/s.
    pub af: f64,
    /// Maximum forgetting rate, 1/s.
    pub mu0: f64,
    /// Bound on the spectral norm of the gain matrix.
    pub k0: f64,
    /// Initial gain matrix is `p_init·I`.
    pub p_init: f64,
    pub deviation: DeviationConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { af: 20.0, mu0: 50.0, k0: 50.0, p_init: 10.0, deviation: DeviationConfig::default() }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("af", self.af), ("mu0", self.mu0), ("k0", self.k0), ("p_init", self.p_init)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("estimator.{name} must be positive, got {v}")));
            }
        }
        if self.p_init > self.k0 {
            return Err(Error::Config(format!(
                "estimator.p_init ({}) exceeds the gain bound k0 ({})",
                self.p_init, self.k0
            )));
        }
        self.deviation.validate()
    }
}

/// Low-pass filtered copies of one actuator's states and command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState {
    pub x1f: f64,
    pub x2f: f64,
    pub uf: f64,
}

/// Time derivative `[ẋ1f, ẋ2f, u̇f]` of the first-order filters.
pub fn filter_deriv(x: [f64; 2], u: f64, fs: &FilterState, af: f64) -> [f64; 3] {
    [af * (x[0] - fs.x1f), af * (x[1] - fs.x2f), af * (u - fs.uf)]
}

/// Regressor row `Y = [uf − x1f, −x2f]` and measurement `x̌ = af·(x2 − x2f)`.
pub fn regressor(fs: &FilterState, x2: f64, af: f64) -> ([f64; 2], f64) {
    ([fs.uf - fs.x1f, -fs.x2f], af * (x2 - fs.x2f))
}

/// Symmetric 2×2 gain matrix stored row-major as `[p11, p12, p21, p22]`.
pub type Gain2 = [f64; 4];

/// Spectral norm of a symmetric 2×2 matrix.
pub fn spectral_norm(p: &Gain2) -> f64 {
    let (lo, hi) = sym2_eigenvalues(p[0], 0.5 * (p[1] + p[2]), p[3]);
    lo.abs().max(hi.abs())
}

/// `μ = μ0·(1 − ‖P‖/k0)`; negative once `‖P‖` exceeds `k0`.
pub fn forgetting_factor(p: &Gain2, mu0: f64, k0: f64) -> f64 {
    mu0 * (1.0 - spectral_norm(p) / k0)
}

/// `(θ̂̇, Ṗ)` with `θ̂̇ = P·Yᵀ·(x̌ − Y·θ̂)` and `Ṗ = μP − P·YᵀY·P`, symmetrised.
pub fn estimator_deriv(
    theta_hat: [f64; 2],
    p: &Gain2,
    y: [f64; 2],
    x_check: f64,
    mu0: f64,
    k0: f64,
) -> ([f64; 2], Gain2) {
    let py = [p[0] * y[0] + p[1] * y[1], p[2] * y[0] + p[3] * y[1]];
    let innovation = x_check - (y[0] * theta_hat[0] + y[1] * theta_hat[1]);
    let dtheta = [py[0] * innovation, py[1] * innovation];

    // P·Yᵀ·Y·P = (P·Yᵀ)(Y·P) and Y·P = (Pᵀ·Yᵀ)ᵀ
    let yp = [y[0] * p[0] + y[1] * p[2], y[0] * p[1] + y[1] * p[3]];
    let mu = forgetting_factor(p, mu0, k0);
    let mut dp = [
        mu * p[0] - py[0] * yp[0],
        mu * p[1] - py[0] * yp[1],
        mu * p[2] - py[1] * yp[0],
        mu * p[3] - py[1] * yp[1],
    ];
    let off = 0.5 * (dp[1] + dp[2]);
    dp[1] = off;
    dp[2] = off;
    (dtheta, dp)
}

/// Projects `P` back to positive definiteness by shifting its spectrum.
/// Returns `true` when a correction was applied.
pub fn enforce_positive_definite(p: &mut Gain2) -> bool {
    let off = 0.5 * (p[1] + p[2]);
    p[1] = off;
    p[2] = off;
    let (lo, _) = sym2_eigenvalues(p[0], off, p[3]);
    if lo < MIN_GAIN_EIGENVALUE {
        let shift = MIN_GAIN_EIGENVALUE - lo;
        p[0] += shift;
        p[3] += shift;
        true
    } else {
        false
    }
}

/// Unclamped `½(|ωn0² − ω̂n²|/dω + |(2ζωn)0 − 2ζωn̂|/dζ)`.
pub fn deviation_raw(theta_hat: [f64; 2], cfg: &DeviationConfig) -> f64 {
    0.5 * ((cfg.wn2_0 - theta_hat[0]).abs() / cfg.d_w + (cfg.tzw_0 - theta_hat[1]).abs() / cfg.d_z)
}

/// Deviation indicator in `[0, 1]`: 0 healthy, 1 fully faulty.
pub fn deviation_indicator(theta_hat: [f64; 2], cfg: &DeviationConfig) -> f64 {
    deviation_raw(theta_hat, cfg).clamp(0.0, 1.0)
}

/// Estimate history of an open-loop identification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub times: Vec<f64>,
    pub estimates: Vec<[f64; 2]>,
}

/// Drives one actuator with `u(t)` switched on at `t0` from rest (actuator and
/// filters at zero) and runs the estimator from `theta0` with `P = p_init·I`.
pub fn identify<U>(
    actuator: ActuatorParams,
    theta0: [f64; 2],
    cfg: &EstimatorConfig,
    grid: &TimeGrid,
    mut u: U,
) -> Result<Identification>
where
    U: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let p = cfg.p_init;
    // [x1, x2, x1f, x2f, uf, θ1, θ2, P]
    let x0 = vec![0.0, 0.0, 0.0, 0.0, 0.0, theta0[0], theta0[1], p, 0.0, 0.0, p];
    let mut times = vec![grid.t0];
    let mut estimates = vec![theta0];
    integrate(
        |t, s: &[f64], ds: &mut [f64]| {
            let ut = u(t);
            let x = [s[0], s[1]];
            let dx = actuator_deriv(x, ut, &actuator);
            let fs = FilterState { x1f: s[2], x2f: s[3], uf: s[4] };
            let df = filter_deriv(x, ut, &fs, cfg.af);
            let (y, x_check) = regressor(&fs, x[1], cfg.af);
            let gain = [s[7], s[8], s[9], s[10]];
            let (dth, dp) = estimator_deriv([s[5], s[6]], &gain, y, x_check, cfg.mu0, cfg.k0);
            ds[..2].copy_from_slice(&dx);
            ds[2..5].copy_from_slice(&df);
            ds[5..7].copy_from_slice(&dth);
            ds[7..].copy_from_slice(&dp);
            Ok(())
        },
        &StateVector::from_values(x0),
        grid,
        |_, t, s| {
            times.push(t);
            estimates.push([s[5], s[6]]);
        },
    )?;
    Ok(Identification { times, estimates })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOMINAL: [f64; 2] = [123.4321, 13.332];

    #[test]
    fn filter_at_rest_has_zero_derivative() {
        let fs = FilterState { x1f: 2.0, x2f: -1.0, uf: 0.5 };
        assert_eq!(filter_deriv([2.0, -1.0], 0.5, &fs, 20.0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn filter_step_response_is_first_order() {
        // integrate u̇f = af(1 − uf) with tiny explicit steps and compare with 1 − e^{−af t}
        let af = 20.0;
        let mut fs = FilterState::default();
        let dt = 1e-5;
        for _ in 0..10_000 {
            let d = filter_deriv([0.0, 0.0], 1.0, &fs, af);
            fs.uf += dt * d[2];
        }
        assert!((fs.uf - (1.0 - (-af * 0.1_f64).exp())).abs() < 1e-4);
    }

    #[test]
    fn regressor_examples() {
        let fs = FilterState { x1f: 0.0, x2f: 0.0, uf: 1.0 };
        assert_eq!(regressor(&fs, 0.0, 20.0), ([1.0, 0.0], 0.0));
        let fs = FilterState { x1f: 0.3, x2f: 0.7, uf: 0.1 };
        assert_eq!(regressor(&fs, 0.7, 20.0).1, 0.0);
    }

    #[test]
    fn forgetting_factor_examples() {
        assert_eq!(forgetting_factor(&[0.0; 4], 50.0, 50.0), 50.0);
        assert!(forgetting_factor(&[50.0, 0.0, 0.0, 50.0], 50.0, 50.0).abs() < 1e-12);
        let mu = forgetting_factor(&[30.0, 0.0, 0.0, 10.0], 50.0, 50.0);
        assert!((mu - 50.0 * (1.0 - 30.0 / 50.0)).abs() < 1e-12);
        assert!(forgetting_factor(&[60.0, 0.0, 0.0, 1.0], 50.0, 50.0) < 0.0);
    }

    #[test]
    fn zero_regressor_means_pure_forgetting() {
        let p = [10.0, 1.0, 1.0, 5.0];
        let (dth, dp) = estimator_deriv(NOMINAL, &p, [0.0, 0.0], 0.0, 50.0, 50.0);
        assert_eq!(dth, [0.0, 0.0]);
        let mu = forgetting_factor(&p, 50.0, 50.0);
        for (a, b) in dp.iter().zip(p.iter()) {
            assert!((a - mu * b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_estimate_has_zero_innovation() {
        let y = [0.4, -1.3];
        let x_check = y[0] * NOMINAL[0] + y[1] * NOMINAL[1];
        let (dth, dp) = estimator_deriv(NOMINAL, &[10.0, 0.0, 0.0, 10.0], y, x_check, 50.0, 50.0);
        assert!(dth.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(dp[1], dp[2]);
    }

    #[test]
    fn indicator_examples() {
        let cfg = DeviationConfig::default();
        assert_eq!(deviation_indicator(NOMINAL, &cfg), 0.0);
        assert!((deviation_indicator([11.6964, 3.078], &cfg) - 1.0).abs() < 1e-12);
        assert!((deviation_indicator([123.4321 - 55.86785, 13.332], &cfg) - 0.25).abs() < 1e-12);
        assert_eq!(deviation_indicator([-500.0, 90.0], &cfg), 1.0);
    }

    #[test]
    fn projection_restores_definiteness() {
        let mut p = [1.0, 2.0, 2.0, 1.0]; // eigenvalues −1, 3
        assert!(enforce_positive_definite(&mut p));
        let (lo, _) = sym2_eigenvalues(p[0], p[1], p[3]);
        assert!((lo - MIN_GAIN_EIGENVALUE).abs() < 1e-12);
        let mut q = [2.0, 0.0, 0.0, 2.0];
        assert!(!enforce_positive_definite(&mut q));
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::default().validate().is_ok());
        assert!(EstimatorConfig { af: 0.0, ..Default::default() }.validate().is_err());
        assert!(EstimatorConfig { p_init: 80.0, ..Default::default() }.validate().is_err());
    }
}
