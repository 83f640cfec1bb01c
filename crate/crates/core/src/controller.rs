//! Two-level control law and its gain certificates.
//!
//! High level: filtered error `ρ = z̃ + η∫z̃` and auxiliary pitch offset
//! `x̃ = −k1·Cᵀl0·ρ`. Low level: tracking error `e = x̃ + k1·Cᵀl0·ρ` and the
//! splitter-direction feedback `u = −φ(x0) − β·k2ᵀe`. `C` picks the pitch
//! angle (`cᵢᵀ = [1, 0]`) of every actuator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::allocator::simplex_check;
use crate::linalg::jacobi_eigenvalues;
use crate::plant::{ActuatorParams, OperatingPoint};
use crate::{Error, Result};

/// Jacobi tolerance used by [`check_k2`].
pub const JACOBI_TOL: f64 = 1e-10;
/// Sweep budget used by [`check_k2`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HighLevelGains {
    pub k1: f64,
    pub eta: f64,
    pub l0: Vec<f64>,
    /// Target L2 gain.
    pub gamma: f64,
    /// Conic constant.
    pub alpha: f64,
    pub h_bar_z: f64,
    pub l_bar_w: f64,
}

impl Default for HighLevelGains {
    fn default() -> Self {
        // l0 points against the pitch gradient of ż = f − gφ so that the
        // conic constraint holds with α > 0.
        Self {
            k1: 61.0,
            eta: 1.0,
            l0: vec![-1.0; 3],
            gamma: 0.3,
            alpha: 3.0,
            h_bar_z: 2.54,
            l_bar_w: 7.8,
        }
    }
}

impl HighLevelGains {
    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [
            ("k1", self.k1),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("h_bar_z", self.h_bar_z),
            ("l_bar_w", self.l_bar_w),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("gains.{name} must be positive, got {v}")));
            }
        }
        if self.l0.len() != n {
            return Err(Error::Config(format!("gains.l0 has {} entries, expected {n}", self.l0.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelGains {
    pub k2: Vec<f64>,
    pub alpha_l: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for LowLevelGains {
    fn default() -> Self {
        // αl = 2 is the smallest decay for which 1/λ + λ = αl has the
        // symmetric solution λ1 = λ2 = 1.
        Self { k2: [50.0, 1.0].repeat(3), alpha_l: 1.0, lambda1: 2.0, lambda2: 0.5 }
    }
}

impl LowLevelGains {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k2.len() != 2 * n {
            return Err(Error::Config(format!(
                "gains.k2 has {} entries, expected {}",
                self.k2.len(),
                2 * n
            )));
        }
        if !(self.alpha_l > 0.0) || !(self.lambda1 > 0.0) || !(self.lambda2 > 0.0) {
            return Err(Error::Config("alpha_l, lambda1 and lambda2 must be positive".into()));
        }
        if (1.0 / self.lambda1 + self.lambda2 - self.alpha_l).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "1/lambda1 + lambda2 = {} must equal alpha_l = {}",
                1.0 / self.lambda1 + self.lambda2,
                self.alpha_l
            )));
        }
        Ok(())
    }

    /// L2-gain bound `λ1/λ2` of the low-level loop when its certificate holds.
    pub fn gain_bound(&self) -> f64 {
        self.lambda1 / self.lambda2
    }
}

/// `ρ = (z − z0) + η·z̃I`.
pub fn filtered_error(z: f64, z0: f64, z_tilde_i: f64, eta: f64) -> f64 {
    (z - z0) + eta * z_tilde_i
}

/// Auxiliary actuator-state offset `x̃ = −k1·Cᵀl0·ρ` (rates are zero).
pub fn high_level_command(rho: f64, g: &HighLevelGains) -> Vec<f64> {
    let mut out = vec![0.0; 2 * g.l0.len()];
    for (i, l) in g.l0.iter().enumerate() {
        out[2 * i] = -g.k1 * l * rho;
    }
    out
}

/// `e = (x − x0) + k1·Cᵀl0·ρ`.
pub fn low_level_error(x: &[f64], x0: &[f64], rho: f64, g: &HighLevelGains) -> Vec<f64> {
    let mut e: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    for (i, l) in g.l0.iter().enumerate() {
        e[2 * i] += g.k1 * l * rho;
    }
    e
}

/// `u_i = −φi(x0i) − β_i·(k2ᵀe)`.
pub fn control_input(e: &[f64], beta: &[f64], op: &OperatingPoint, k2: &[f64]) -> Result<Vec<f64>> {
    if !simplex_check(beta) {
        return Err(Error::Contract(format!("allocation {beta:?} is not on the simplex")));
    }
    if e.len() != k2.len() || beta.len() != op.u0_offset.len() {
        return Err(Error::Contract("control dimensions disagree".into()));
    }
    let s: f64 = k2.iter().zip(e).map(|(k, v)| k * v).sum();
    Ok(op.u0_offset.iter().zip(beta).map(|(u0, b)| u0 - b * s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K1Check {
    pub threshold: f64,
    pub satisfied: bool,
    /// `k1 − threshold`.
    pub margin: f64,
}

/// `k1 ≥ (h̄z + 2η)²/(4αη) + l̄w²/(4αγ²) + 1/α`.
pub fn check_k1(g: &HighLevelGains) -> Result<K1Check> {
    if !(g.alpha > 0.0) || !(g.eta > 0.0) || !(g.gamma > 0.0) {
        return Err(Error::Config("alpha, eta and gamma must be positive".into()));
    }
    let hz = g.h_bar_z + 2.0 * g.eta;
    let threshold = hz * hz / (4.0 * g.alpha * g.eta)
        + g.l_bar_w * g.l_bar_w / (4.0 * g.alpha * g.gamma * g.gamma)
        + 1.0 / g.alpha;
    Ok(K1Check { threshold, satisfied: g.k1 >= threshold, margin: g.k1 - threshold })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Check {
    /// Largest eigenvalue of `(2a_r + αl)I − Bβk2ᵀ − k2βᵀBᵀ`.
    pub max_eig: f64,
    pub satisfied: bool,
    /// Largest real part over all actuator eigenvalues.
    pub a_r: f64,
}

/// Input direction `B·β` of the stacked actuator model (`b_i = [0, ωn²_i]`).
pub fn input_direction(actuators: &[ActuatorParams], beta: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; 2 * actuators.len()];
    for (i, (a, b)) in actuators.iter().zip(beta).enumerate() {
        v[2 * i + 1] = a.wn2 * b;
    }
    v
}

/// The symmetric matrix whose negative semi-definiteness certifies `k2`.
pub fn k2_certificate_matrix(
    actuators: &[ActuatorParams],
    beta: &[f64],
    k2: &[f64],
    alpha_l: f64,
) -> (Vec<f64>, f64) {
    let a_r = actuators
        .iter()
        .map(ActuatorParams::max_real_eigenvalue)
        .fold(f64::NEG_INFINITY, f64::max);
    let bb = input_direction(actuators, beta);
    let m = bb.len();
    let mut mat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            mat[i * m + j] = -(bb[i] * k2[j] + k2[i] * bb[j]);
        }
        mat[i * m + i] += 2.0 * a_r + alpha_l;
    }
    (mat, a_r)
}

/// Low-level sufficient condition `(2a_r + αl)I − Bβk2ᵀ − k2βᵀBᵀ ≤ 0`.
pub fn check_k2(actuators: &[ActuatorParams], beta: &[f64], k2: &[f64], alpha_l: f64) -> Result<K2Check> {
    if !simplex_check(beta) {
        return Err(Error::Contract(format!("allocation {beta:?} is not on the simplex")));
    }
    if !(alpha_l > 0.0) {
        return Err(Error::Config(format!("alpha_l must be positive, got {alpha_l}")));
    }
    if beta.len() != actuators.len() || k2.len() != 2 * actuators.len() {
        return Err(Error::Contract("check_k2 dimensions disagree".into()));
    }
    let (mat, a_r) = k2_certificate_matrix(actuators, beta, k2, alpha_l);
    let eig = jacobi_eigenvalues(&mat, k2.len(), JACOBI_TOL, JACOBI_MAX_SWEEPS)?;
    let max_eig = *eig.last().expect("non-empty spectrum");
    Ok(K2Check { max_eig, satisfied: max_eig <= 0.0, a_r })
}

/// Gain aligned with the nominal input direction: `k2 = ε·B0·β`, `0 < ε ≤ 2`.
pub fn remark_k2(nominal: &[ActuatorParams], beta: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 2], got {epsilon}")));
    }
    Ok(input_direction(nominal, beta).into_iter().map(|v| epsilon * v).collect())
}
