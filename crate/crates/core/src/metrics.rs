//! Post-hoc checks on sampled trajectories.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Trapezoidal integral of uniformly sampled `y`.
pub fn trapezoid(y: &[f64], dt: f64) -> f64 {
    match y {
        [] | [_] => 0.0,
        [first, .., last] => dt * (y.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// `sqrt(∫ρ² dt / ∫w̃² dt)` by trapezoidal quadrature.
pub fn empirical_l2_gain(rho: &[f64], w_tilde: &[f64], dt: f64) -> Result<f64> {
    if rho.len() != w_tilde.len() {
        return Err(Error::Contract("series lengths differ".into()));
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let den = trapezoid(&sq(w_tilde), dt);
    if !(den > 0.0) {
        return Err(Error::UndefinedGain);
    }
    Ok(libm::sqrt(trapezoid(&sq(rho), dt) / den))
}

/// Residual `V̇ − (γ²w̃² − ρ²)` of the high-level storage function
/// `V = ½ρ² + ½η²z̃I²`, with `V̇` from central differences (one-sided at the ends).
pub fn dissipation_residual(rho: &[f64], z_tilde_i: &[f64], w_tilde: &[f64], gamma: f64, eta: f64, dt: f64) -> Vec<f64> {
    let n = rho.len();
    let v: Vec<f64> = rho
        .iter()
        .zip(z_tilde_i)
        .map(|(r, zi)| 0.5 * r * r + 0.5 * eta * eta * zi * zi)
        .collect();
    (0..n)
        .map(|k| {
            let vdot = if n < 2 {
                0.0
            } else if k == 0 {
                (v[1] - v[0]) / dt
            } else if k == n - 1 {
                (v[n - 1] - v[n - 2]) / dt
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * dt)
            };
            vdot - (gamma * gamma * w_tilde[k] * w_tilde[k] - rho[k] * rho[k])
        })
        .collect()
}

/// Largest entry of `values` where `mask` holds, or `None` if nothing qualifies.
pub fn masked_max(values: &[f64], mask: impl Fn(usize) -> bool) -> Option<f64> {
    values
        .iter()
        .enumerate()
        .filter(|(k, _)| mask(*k))
        .map(|(_, v)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// Root mean square of `y`.
pub fn rms(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    libm::sqrt(y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStats {
    pub rms: f64,
    pub max_dev: f64,
    /// Seconds from the event until `|z − z0|` stays below threshold for the hold time.
    pub recovery_time: Option<f64>,
}

/// Hold time used by [`tracking_stats`] recovery detection.
pub const RECOVERY_HOLD: f64 = 5.0;

/// Deviation statistics of `z` about `z0`. Recovery is measured from `event`
/// (if any) as the first time `t* ≥ event` with `|z − z0| < threshold` on
/// `[t*, t* + 5 s]`.
pub fn tracking_stats(t: &[f64], z: &[f64], z0: f64, threshold: f64, event: Option<f64>) -> TrackingStats {
    let dev: Vec<f64> = z.iter().map(|v| v - z0).collect();
    let max_dev = dev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let recovery_time = event.and_then(|te| {
        let mut candidate: Option<usize> = None;
        for (k, (&tk, d)) in t.iter().zip(&dev).enumerate() {
            if tk < te {
                continue;
            }
            if d.abs() < threshold {
                let start = *candidate.get_or_insert(k);
                if tk - t[start] >= RECOVERY_HOLD - 1e-9 {
                    return Some(t[start] - te);
                }
            } else {
                candidate = None;
            }
        }
        None
    });
    TrackingStats { rms: rms(&dev), max_dev, recovery_time }
}

/// Aggregates over one fault window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub t_on: f64,
    pub t_off: f64,
    pub z_max_dev: f64,
    pub z_rms_dev: f64,
    pub phi_track_rms: f64,
    pub max_dissipation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    /// `None` when the disturbance energy is zero.
    pub l2_gain_emp: Option<f64>,
    /// Max residual over certified samples (`‖e‖ < e_tol`, outside fault windows).
    pub max_dissipation_residual: Option<f64>,
    /// Number of certified samples behind `max_dissipation_residual`.
    pub dissipation_samples: usize,
    /// Max residual over every sample, for information.
    pub max_dissipation_residual_all: f64,
    pub z_rms_dev: f64,
    pub z_max_dev: f64,
    /// RMS of `φ(y) − φ(y0 + Cx̃)` over the whole run.
    pub phi_track_rms: f64,
    /// Rotor-speed recovery time after the first fault onset.
    pub phi_recovery_time: Option<f64>,
    pub fault_window_stats: Vec<WindowStats>,
    pub pd_projections: usize,
}

impl RunMetrics {
    /// Named scalar view used by reports and comparisons. Missing values are NaN.
    /// Names of [`RunMetrics::scalars`], in order.
    pub fn default_scalar_names() -> Vec<&'static str> {
        Self::default().scalars().into_iter().map(|(k, _)| k).collect()
    }

    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        alloc::vec![
            ("l2_gain_emp", self.l2_gain_emp.unwrap_or(f64::NAN)),
            ("max_dissipation_residual", self.max_dissipation_residual.unwrap_or(f64::NAN)),
            ("dissipation_samples", self.dissipation_samples as f64),
            ("max_dissipation_residual_all", self.max_dissipation_residual_all),
            ("z_rms_dev", self.z_rms_dev),
            ("z_max_dev", self.z_max_dev),
            ("phi_track_rms", self.phi_track_rms),
            ("phi_recovery_time", self.phi_recovery_time.unwrap_or(f64::NAN)),
            ("pd_projections", self.pd_projections as f64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDelta {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// `b − a`.
    pub delta: f64,
    /// `100·(b − a)/|a|`, NaN when `a = 0`.
    pub percent: f64,
}

/// Side-by-side deltas of two runs' scalar metrics.
pub fn compare_runs(a: &RunMetrics, b: &RunMetrics) -> Vec<MetricDelta> {
    a.scalars()
        .into_iter()
        .zip(b.scalars())
        .map(|((name, va), (_, vb))| MetricDelta {
            name: name.into(),
            a: va,
            b: vb,
            delta: vb - va,
            percent: if va == 0.0 { f64::NAN } else { 100.0 * (vb - va) / va.abs() },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gain_examples() {
        let w: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).sin()).collect();
        assert_eq!(empirical_l2_gain(&vec![0.0; 100], &w, 0.01).unwrap(), 0.0);
        let rho: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        assert!((empirical_l2_gain(&rho, &w, 0.01).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(empirical_l2_gain(&rho, &vec![0.0; 100], 0.01), Err(Error::UndefinedGain));
    }

    #[test]
    fn quiet_storage_dissipates() {
        let w = vec![0.3, -0.2, 0.5, 0.0];
        let r = dissipation_residual(&[0.0; 4], &[0.0; 4], &w, 0.3, 1.0, 0.01);
        assert!(r.iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn masked_max_examples() {
        assert_eq!(masked_max(&[1.0, 5.0, 3.0], |k| k != 1), Some(3.0));
        assert_eq!(masked_max(&[1.0], |_| false), None);
    }

    #[test]
    fn tracking_examples() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let flat = tracking_stats(&t, &vec![1.267; t.len()], 1.267, 0.01, None);
        assert_eq!((flat.rms, flat.max_dev), (0.0, 0.0));

        // one full period, endpoint excluded
        let t: Vec<f64> = (0..1000).map(|k| k as f64 * 0.001).collect();
        let z: Vec<f64> = t.iter().map(|s| 1.267 + 0.01 * (core::f64::consts::TAU * s).sin()).collect();
        let st = tracking_stats(&t, &z, 1.267, 0.1, None);
        assert!((st.rms - 0.01 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn recovery_requires_a_full_hold() {
        let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
        let z: Vec<f64> = t.iter().map(|s| if *s < 3.0 || (*s > 6.0 && *s < 6.5) { 1.0 } else { 0.0 }).collect();
        let st = tracking_stats(&t, &z, 0.0, 0.5, Some(1.0));
        assert!((st.recovery_time.unwrap() - 5.5).abs() < 0.011);
        let none = tracking_stats(&t, &vec![1.0; t.len()], 0.0, 0.5, Some(1.0));
        assert_eq!(none.recovery_time, None);
    }

    fn synthetic(z: f64, gain: f64) -> RunMetrics {
        RunMetrics {
            l2_gain_emp: Some(gain),
            max_dissipation_residual: Some(-1.0),
            dissipation_samples: 10,
            max_dissipation_residual_all: 0.5,
            z_rms_dev: z / 2.0,
            z_max_dev: z,
            phi_track_rms: 2.0,
            phi_recovery_time: None,
            fault_window_stats: vec![],
            pd_projections: 0,
        }
    }

    #[test]
    fn comparison_deltas() {
        let pairs = [(synthetic(0.02, 0.1), synthetic(0.01, 0.2)), (synthetic(1.0, 0.3), synthetic(3.0, 0.3)), (synthetic(0.5, 0.0), synthetic(0.5, 0.4))];
        let expect = [(-0.01, 0.1), (2.0, 0.0), (0.0, 0.4)];
        for ((a, b), (dz, dg)) in pairs.iter().zip(expect) {
            let cmp = compare_runs(a, b);
            let get = |n: &str| cmp.iter().find(|d| d.name == n).unwrap().clone();
            assert!((get("z_max_dev").delta - dz).abs() < 1e-15);
            assert!((get("l2_gain_emp").delta - dg).abs() < 1e-15);
            let back = compare_runs(b, a);
            for (x, y) in cmp.iter().zip(&back) {
                if x.delta.is_nan() {
                    assert!(y.delta.is_nan());
                } else {
                    assert_eq!(x.delta, -y.delta);
                }
            }
        }
        let c = compare_runs(&synthetic(0.02, 0.1), &synthetic(0.01, 0.2));
        let pct = c.iter().find(|d| d.name == "z_max_dev").unwrap().percent;
        assert!((pct + 50.0).abs() < 1e-9);
    }
}
