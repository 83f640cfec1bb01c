//! Trajectory CSV files.
//!
//! The file starts with `# key = value` metadata lines, the first of which is
//! always `# schema = faultsim-trajectory/1`, followed by a header row and one
//! row per grid point. Numbers use the shortest representation that parses
//! back to the identical `f64`.

use std::io::Write;
use std::path::Path;

use faultsim_core::scenario::{Trajectory, TRAJECTORY_SCHEMA};
use faultsim_core::wind::WindTrace;

use crate::error::{HarnessError, Result};

/// Ordered `key = value` pairs carried in the comment block.
pub type Metadata = Vec<(String, String)>;

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, meta: &Metadata) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "# schema = {TRAJECTORY_SCHEMA}")?;
    for (k, v) in meta {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(traj.header())?;
    let mut cells: Vec<String> = Vec::with_capacity(traj.n_cols());
    for row in traj.rows() {
        cells.clear();
        cells.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&cells)?;
    }
    w.flush()
}

pub fn emit_csv(traj: &Trajectory, meta: &Metadata, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_trajectory(file, traj, meta).map_err(|e| HarnessError::io(path, e))
}

/// Parses trajectory text; returns the table and its metadata (schema excluded).
pub fn parse_trajectory(text: &str, origin: &Path) -> Result<(Trajectory, Metadata)> {
    let mut meta = Metadata::new();
    let mut body_start = 0;
    let mut schema = None;
    for line in text.lines() {
        let Some(comment) = line.strip_prefix('#') else { break };
        body_start += line.len() + 1;
        if let Some((k, v)) = comment.split_once('=') {
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k == "schema" {
                schema = Some(v);
            } else {
                meta.push((k, v));
            }
        }
    }
    if let Some(s) = &schema {
        if s != TRAJECTORY_SCHEMA {
            return Err(HarnessError::format(origin, format!("unsupported schema `{s}`")));
        }
    }
    let body = text.get(body_start.min(text.len())..).unwrap_or("");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::format(origin, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut traj = Trajectory::new(header);
    let mut row = Vec::with_capacity(traj.n_cols());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::format(origin, e.to_string()))?;
        row.clear();
        for cell in rec.iter() {
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::format(origin, format!("data row {}: `{cell}` is not a number", k + 1)))?;
            row.push(v);
        }
        traj.push_row(&row).map_err(|e| HarnessError::format(origin, format!("data row {}: {e}", k + 1)))?;
    }
    Ok((traj, meta))
}

pub fn read_trajectory(path: &Path) -> Result<(Trajectory, Metadata)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_trajectory(&text, path)
}

/// Loads a measured wind profile from any CSV with `t` and `w` columns
/// (including a previously written trajectory).
pub fn read_wind_trace(path: &Path) -> Result<WindTrace> {
    let (traj, _) = read_trajectory(path)?;
    let (Some(t), Some(w)) = (traj.column("t"), traj.column("w")) else {
        return Err(HarnessError::format(path, "wind trace needs `t` and `w` columns"));
    };
    WindTrace::new(t, w).map_err(|e| HarnessError::format(path, e.to_string()))
}
