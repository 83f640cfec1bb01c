//! Flat `key = value` metrics report.

use std::fmt::Write as _;
use std::path::Path;

use faultsim_core::scenario::{RunOutput, ScenarioConfig, TRAJECTORY_SCHEMA};
use faultsim_core::wind::RNG_ALGORITHM;

use crate::error::{HarnessError, Result};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

/// Ordered report entries for one run.
pub fn report_entries(cfg: &ScenarioConfig, out: &RunOutput) -> Vec<(String, String)> {
    let m = &out.metrics;
    let mut e: Vec<(String, String)> = vec![
        ("scenario".into(), cfg.name.clone()),
        ("schema".into(), TRAJECTORY_SCHEMA.into()),
        ("rng".into(), RNG_ALGORITHM.into()),
        ("seed".into(), cfg.wind.seed.to_string()),
        ("dt".into(), cfg.grid.dt.to_string()),
        ("steps".into(), cfg.grid.steps().to_string()),
        ("l2_gain_emp".into(), opt(m.l2_gain_emp)),
        ("max_dissipation_residual".into(), opt(m.max_dissipation_residual)),
        ("dissipation_samples".into(), m.dissipation_samples.to_string()),
        ("max_dissipation_residual_all".into(), m.max_dissipation_residual_all.to_string()),
        ("z_rms_dev".into(), m.z_rms_dev.to_string()),
        ("z_max_dev".into(), m.z_max_dev.to_string()),
        ("phi_track_rms".into(), m.phi_track_rms.to_string()),
        ("phi_recovery_time".into(), opt(m.phi_recovery_time)),
        ("pd_projections".into(), m.pd_projections.to_string()),
    ];
    for (k, w) in m.fault_window_stats.iter().enumerate() {
        let p = format!("fault_window_{}", k + 1);
        e.push((format!("{p}.t_on"), w.t_on.to_string()));
        e.push((format!("{p}.t_off"), w.t_off.to_string()));
        e.push((format!("{p}.z_max_dev"), w.z_max_dev.to_string()));
        e.push((format!("{p}.z_rms_dev"), w.z_rms_dev.to_string()));
        e.push((format!("{p}.phi_track_rms"), w.phi_track_rms.to_string()));
        e.push((format!("{p}.max_dissipation_residual"), w.max_dissipation_residual.to_string()));
    }
    let g = &out.gains;
    e.push(("k1_threshold".into(), g.k1.threshold.to_string()));
    e.push(("k1_satisfied".into(), g.k1.satisfied.to_string()));
    e.push(("k2_max_eig".into(), g.k2.max_eig.to_string()));
    e.push(("k2_satisfied".into(), g.k2.satisfied.to_string()));
    e.push(("warnings".into(), out.warnings.len().to_string()));
    for (k, w) in out.warnings.iter().enumerate() {
        e.push((format!("warning_{}", k + 1), w.clone()));
    }
    e
}

pub fn format_report(entries: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

pub fn emit_report(cfg: &ScenarioConfig, out: &RunOutput, path: &Path) -> Result<()> {
    std::fs::write(path, format_report(&report_entries(cfg, out))).map_err(|e| HarnessError::io(path, e))
}

/// Parses a report back into ordered pairs.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
