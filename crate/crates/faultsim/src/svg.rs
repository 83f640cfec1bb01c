//! Minimal native SVG line charts: one panel per channel group.

use std::fmt::Write as _;
use std::path::Path;

use faultsim_core::scenario::Trajectory;

use crate::error::{HarnessError, Result};

const PANEL_W: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Columns named by `channel`: the column itself, or every `channel_<i>`.
pub fn resolve_channel(traj: &Trajectory, channel: &str) -> Vec<String> {
    if traj.column_index(channel).is_some() {
        return vec![channel.to_string()];
    }
    (1..)
        .map(|i| format!("{channel}_{i}"))
        .take_while(|name| traj.column_index(name).is_some())
        .collect()
}

/// Keeps the extremes of each bucket so spikes survive decimation.
fn decimate(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    if t.len() <= MAX_POINTS {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let bucket = t.len().div_ceil(MAX_POINTS / 2);
    let mut out = Vec::with_capacity(MAX_POINTS + 2);
    for start in (0..t.len()).step_by(bucket) {
        let end = (start + bucket).min(t.len());
        let (mut lo, mut hi) = (start, start);
        for k in start..end {
            if y[k] < y[lo] {
                lo = k;
            }
            if y[k] > y[hi] {
                hi = k;
            }
        }
        for k in if lo <= hi { [lo, hi] } else { [hi, lo] } {
            out.push((t[k], y[k]));
        }
    }
    out
}

/// Round tick spacing covering `span` in about five steps.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo);
    let mut v = Vec::new();
    let mut x = (lo / step).ceil() * step;
    while x <= hi + 1e-9 * step {
        v.push(if x.abs() < 1e-12 * step { 0.0 } else { x });
        x += step;
    }
    v
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders the requested channel groups over `t_range` (all samples if `None`).
pub fn render_svg(traj: &Trajectory, channels: &[String], t_range: Option<(f64, f64)>) -> Result<String, String> {
    let t_all = traj.column("t").ok_or("trajectory has no `t` column")?;
    let idx: Vec<usize> = (0..t_all.len())
        .filter(|&k| t_range.is_none_or(|(a, b)| t_all[k] >= a && t_all[k] <= b))
        .collect();
    if idx.len() < 2 {
        return Err("fewer than two samples in the plotted range".into());
    }
    let t: Vec<f64> = idx.iter().map(|&k| t_all[k]).collect();
    let groups: Vec<(String, Vec<String>)> = channels
        .iter()
        .map(|c| {
            let cols = resolve_channel(traj, c);
            if cols.is_empty() {
                Err(format!("unknown channel `{c}`"))
            } else {
                Ok((c.clone(), cols))
            }
        })
        .collect::<Result<_, _>>()?;
    if groups.is_empty() {
        return Err("no channels requested".into());
    }

    let height = PANEL_H * groups.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    for (g, (name, cols)) in groups.iter().enumerate() {
        let series: Vec<(String, Vec<f64>)> = cols
            .iter()
            .map(|c| {
                let full = traj.column(c).unwrap_or_default();
                (c.clone(), idx.iter().map(|&k| full[k]).collect())
            })
            .collect();
        let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            let pad = 0.5 * hi.abs().max(1e-9);
            (lo, hi) = (lo - pad, hi + pad);
        }
        let pad = 0.05 * (hi - lo);
        (lo, hi) = (lo - pad, hi + pad);

        let oy = PANEL_H * g as f64 + MARGIN_T;
        let sx = |x: f64| MARGIN_L + (x - t0) / (t1 - t0) * pw;
        let sy = |y: f64| oy + ph - (y - lo) / (hi - lo) * ph;
        let _ = writeln!(s, r#"<g class="panel" data-channel="{name}">"#);
        let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="{:.1}" font-size="13">{name}</text>"#, oy - 10.0);
        let _ = writeln!(
            s,
            r#"<rect class="axes" x="{MARGIN_L}" y="{oy:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
        );
        for x in ticks(t0, t1) {
            let px = sx(x);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                oy + ph,
                oy + ph + 5.0,
                oy + ph + 18.0,
                label(x)
            );
        }
        for y in ticks(lo, hi) {
            let py = sy(y);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{py:.1}" x2="{MARGIN_L}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN_L - 5.0,
                MARGIN_L - 8.0,
                py + 4.0,
                label(y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t [s]</text>"#,
            MARGIN_L + pw / 2.0,
            oy + ph + 34.0
        );
        for (k, (col, y)) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut pts = String::new();
            for (x, v) in decimate(&t, y) {
                if v.is_finite() {
                    let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(v));
                }
            }
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-name="{col}" fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                pts.trim_end()
            );
            let ly = oy + 12.0 + 16.0 * k as f64;
            let lx = MARGIN_L + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text class="legend" x="{:.1}" y="{:.1}">{col}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(traj: &Trajectory, channels: &[String], t_range: Option<(f64, f64)>, path: &Path) -> Result<()> {
    let svg = render_svg(traj, channels, t_range).map_err(|m| HarnessError::format(path, m))?;
    std::fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}
