//! Running scenarios and writing their artifacts.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use faultsim_core::metrics::RunMetrics;
use faultsim_core::scenario::{run_scenario, RunOutput, ScenarioConfig};
use faultsim_core::wind::RNG_ALGORITHM;
use rayon::prelude::*;

use crate::config::{load_config, RunConfig};
use crate::csvio::{emit_csv, Metadata};
use crate::error::{ConfigError, HarnessError, Result};
use crate::report::emit_report;
use crate::svg::emit_svg;

/// Metadata written into the trajectory comment block.
pub fn trajectory_metadata(cfg: &ScenarioConfig) -> Metadata {
    vec![
        ("scenario".into(), cfg.name.clone()),
        ("rng".into(), RNG_ALGORITHM.into()),
        ("seed".into(), cfg.wind.seed.to_string()),
        ("t0".into(), cfg.grid.t0.to_string()),
        ("tf".into(), cfg.grid.tf.to_string()),
        ("dt".into(), cfg.grid.dt.to_string()),
        ("actuators".into(), cfg.n_actuators().to_string()),
    ]
}

/// Figure name, channel groups and an optional time window.
type Figure = (&'static str, Vec<String>, Option<(f64, f64)>);

/// Standard figure set.
fn figures(cfg: &ScenarioConfig) -> Vec<Figure> {
    let mut figs = vec![
        ("rotor_speed", vec!["z".to_string()], None),
        ("splitter", vec!["beta".to_string()], None),
        ("pitch", vec!["x1".to_string()], None),
        ("estimates", vec!["wn2_hat".to_string(), "tzw_hat".to_string(), "theta_check".to_string()], None),
        ("wind", vec!["w".to_string()], None),
    ];
    if let Some((on, off)) = cfg.faults.windows().find(|(on, _)| *on < cfg.grid.tf) {
        let lo = (on - 5.0).max(cfg.grid.t0);
        let hi = (off + 10.0).min(cfg.grid.tf);
        figs.push(("rotor_speed_fault", vec!["z".to_string()], Some((lo, hi))));
    }
    figs
}

/// Runs one scenario and writes the enabled artifacts into `out_dir`.
pub fn execute(run: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let out = run_scenario(&run.scenario)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let cfg = &run.scenario;
        if let Some(name) = &run.output.csv {
            emit_csv(&out.trajectory, &trajectory_metadata(cfg), &dir.join(name))?;
        }
        if let Some(name) = &run.output.report {
            emit_report(cfg, &out, &dir.join(name))?;
        }
        if run.output.svg {
            for (name, channels, window) in figures(cfg) {
                emit_svg(&out.trajectory, &channels, window, &dir.join(format!("{name}.svg")))?;
            }
        }
        let resolved = crate::config::dump_config(run);
        std::fs::write(dir.join("resolved.ini"), resolved).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(out)
}

/// One line of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub name: String,
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Runs every scenario independently (in parallel). Names must be unique;
/// individual failures are recorded and do not stop the batch. Rows come
/// back sorted by name.
pub fn run_sweep(runs: &[RunConfig], out_dir: Option<&Path>) -> Result<Vec<SweepRow>> {
    let mut names = BTreeSet::new();
    for r in runs {
        if !names.insert(r.scenario.name.as_str()) {
            return Err(ConfigError::new(None, "scenario.name", format!("duplicate scenario name `{}`", r.scenario.name)).into());
        }
    }
    let mut rows: Vec<SweepRow> = runs
        .par_iter()
        .map(|r| {
            let dir = out_dir.map(|d| d.join(&r.scenario.name));
            SweepRow {
                name: r.scenario.name.clone(),
                outcome: execute(r, dir.as_deref()).map(|o| o.metrics).map_err(|e| e.to_string()),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(rows)
}

/// `name,status,<metric...>` table for a sweep.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let names: Vec<&str> = RunMetrics::default_scalar_names();
    let mut s = format!("name,status,{}\n", names.join(","));
    for r in rows {
        match &r.outcome {
            Ok(m) => {
                let vals: Vec<String> = m.scalars().iter().map(|(_, v)| format!("{v:?}")).collect();
                s.push_str(&format!("{},ok,{}\n", r.name, vals.join(",")));
            }
            Err(e) => {
                let blanks = vec![""; names.len()].join(",");
                s.push_str(&format!("{},\"failed: {}\",{blanks}\n", r.name, e.replace('"', "'")));
            }
        }
    }
    s
}

/// Loads every `*.ini` in `dir` (sorted by file name). A scenario without an
/// explicit name is named after its file.
pub fn load_config_dir(dir: &Path) -> Result<Vec<RunConfig>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ini"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let mut run = load_config(p)?;
            if run.scenario.name == ScenarioConfig::default().name {
                if let Some(stem) = p.file_stem() {
                    run.scenario.name = stem.to_string_lossy().into_owned();
                }
            }
            Ok(run)
        })
        .collect()
}
