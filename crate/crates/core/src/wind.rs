//! Seeded, bounded Ornstein–Uhlenbeck wind speed.
//!
//! Algorithm, fixed so other implementations can reproduce a series bit for bit:
//!
//! * generator: xoshiro256++ seeded through SplitMix64 from the 64-bit seed
//!   (`Xoshiro256PlusPlus::seed_from_u64`);
//! * uniform: `(next_u64() >> 11) · 2⁻⁵³`, in `[0, 1)`;
//! * normal: Box–Muller cosine branch, `sqrt(−2 ln(1 − u1)) · cos(2π u2)`,
//!   two uniforms per sample, the sine branch is discarded;
//! * step: exact OU transition `w' = w0 + (w − w0)·a + σ·sqrt(1 − a²)·ξ`
//!   with `a = exp(−dt/τc)`, then clamped to `[w_min, w_max]`.
//!
//! `σ` is the stationary standard deviation of the unclamped process.

use alloc::format;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::ode::TimeGrid;
use crate::{Error, Result};

/// Name recorded in output metadata.
pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64 box-muller";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindConfig {
    pub w0: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub tau_c: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self { w0: 22.0, w_min: 11.4, w_max: 25.0, tau_c: 10.0, sigma: 0.8, seed: 1 }
    }
}

impl WindConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_min < self.w0 && self.w0 < self.w_max) {
            return Err(Error::Config(format!(
                "wind bounds must satisfy w_min < w0 < w_max, got {} < {} < {}",
                self.w_min, self.w0, self.w_max
            )));
        }
        if !(self.tau_c > 0.0) {
            return Err(Error::Config(format!("wind.tau_c must be positive, got {}", self.tau_c)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Config(format!("wind.sigma must be nonnegative, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Portable normal sampler on top of xoshiro256++.
#[derive(Debug, Clone)]
pub struct WindRng {
    inner: Xoshiro256PlusPlus,
}

impl WindRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(1.0 - u1)) * libm::cos(core::f64::consts::TAU * u2)
    }
}

/// One OU transition of length `dt` followed by the hard clamp.
pub fn wind_step(w: f64, dt: f64, cfg: &WindConfig, rng: &mut WindRng) -> f64 {
    let a = libm::exp(-dt / cfg.tau_c);
    let xi = rng.standard_normal();
    let next = cfg.w0 + (w - cfg.w0) * a + cfg.sigma * libm::sqrt(1.0 - a * a) * xi;
    next.clamp(cfg.w_min, cfg.w_max)
}

/// Stateful generator owned by one scenario.
#[derive(Debug, Clone)]
pub struct WindGenerator {
    cfg: WindConfig,
    rng: WindRng,
    w: f64,
}

impl WindGenerator {
    pub fn new(cfg: WindConfig) -> Self {
        Self { rng: WindRng::new(cfg.seed), w: cfg.w0, cfg }
    }

    pub fn current(&self) -> f64 {
        self.w
    }

    pub fn advance(&mut self, dt: f64) -> f64 {
        self.w = wind_step(self.w, dt, &self.cfg, &mut self.rng);
        self.w
    }
}

/// Wind sampled on every grid point, starting from `w0`.
pub fn wind_series(cfg: &WindConfig, grid: &TimeGrid) -> Vec<f64> {
    let mut gen = WindGenerator::new(*cfg);
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(gen.current());
    for _ in 0..grid.steps() {
        out.push(gen.advance(grid.dt));
    }
    out
}

/// Externally supplied wind samples, linearly interpolated and held flat
/// outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct WindTrace {
    times: Vec<f64>,
    speeds: Vec<f64>,
}

impl WindTrace {
    pub fn new(times: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != speeds.len() {
            return Err(Error::Config("wind trace needs matching, non-empty columns".into()));
        }
        if times.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Config("wind trace times must be strictly increasing".into()));
        }
        if speeds.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::Config("wind trace contains non-finite values".into()));
        }
        Ok(Self { times, speeds })
    }

    pub fn sample(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&ti| ti <= t);
        if k == 0 {
            return self.speeds[0];
        }
        if k == self.times.len() {
            return self.speeds[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (w0, w1) = (self.speeds[k - 1], self.speeds[k]);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }
}
