use faultsim::csvio::{emit_csv, parse_trajectory, read_trajectory, read_wind_trace, write_trajectory};
use faultsim::report::{format_report, parse_report, report_entries};
use faultsim::run::trajectory_metadata;
use faultsim::svg::render_svg;
use faultsim_core::scenario::{run_scenario, ScenarioConfig, Trajectory, TRAJECTORY_SCHEMA};
use std::path::Path;

fn short_run(tf: f64) -> (ScenarioConfig, faultsim_core::scenario::RunOutput) {
    let mut cfg = ScenarioConfig::default();
    cfg.grid.tf = tf;
    let out = run_scenario(&cfg).unwrap();
    (cfg, out)
}

#[test]
fn two_row_table_gives_header_and_two_lines() {
    let mut t = Trajectory::new(vec!["t".into(), "z".into()]);
    t.push_row(&[0.0, 1.267]).unwrap();
    t.push_row(&[0.1, 1.0e-300]).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &t, &vec![("seed".into(), "7".into())]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], format!("# schema = {TRAJECTORY_SCHEMA}"));
    assert_eq!(lines[1], "# seed = 7");
    assert_eq!(&lines[2..], ["t,z", "0.0,1.267", "0.1,1e-300"]);
    let (back, meta) = parse_trajectory(&text, Path::new("mem")).unwrap();
    assert_eq!(back, t);
    assert_eq!(meta, vec![("seed".to_string(), "7".to_string())]);
}

#[test]
fn simulated_trajectory_round_trips_exactly() {
    let (cfg, out) = short_run(2.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    emit_csv(&out.trajectory, &trajectory_metadata(&cfg), &path).unwrap();
    let (back, meta) = read_trajectory(&path).unwrap();
    assert_eq!(back.header(), out.trajectory.header());
    assert_eq!(back.n_rows(), cfg.grid.steps() + 1);
    for (a, b) in back.rows().zip(out.trajectory.rows()) {
        for (x, y) in a.iter().zip(b) {
            assert!(x.to_bits() == y.to_bits() || (x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
    assert!(meta.iter().any(|(k, v)| k == "rng" && v.contains("xoshiro256++")));
}

#[test]
fn foreign_schema_is_rejected() {
    let err = parse_trajectory("# schema = other/9\nt\n0\n", Path::new("x.csv")).unwrap_err();
    assert!(err.to_string().contains("unsupported schema"));
    assert!(parse_trajectory("t,z\n0,abc\n", Path::new("x.csv")).is_err());
}

#[test]
fn beta_channel_renders_one_series_per_actuator() {
    let (_, out) = short_run(1.0);
    let svg = render_svg(&out.trajectory, &["beta".into()], None).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("class=\"panel\"").count(), 1);
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert_eq!(svg.matches("class=\"legend\"").count(), 3);
    let two = render_svg(&out.trajectory, &["z".into(), "x1".into()], Some((0.2, 0.8))).unwrap();
    assert_eq!(two.matches("class=\"panel\"").count(), 2);
    assert_eq!(two.matches("<polyline").count(), 4);
    assert!(render_svg(&out.trajectory, &["nonsense".into()], None).is_err());
}

#[test]
fn report_is_key_value_and_parses_back() {
    let (cfg, out) = short_run(1.0);
    let entries = report_entries(&cfg, &out);
    let text = format_report(&entries);
    assert!(text.lines().all(|l| l.contains(" = ")));
    assert_eq!(parse_report(&text), entries);
    let get = |k: &str| entries.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap();
    assert_eq!(get("seed"), "1");
    assert_eq!(get("k1_satisfied"), "true");
    assert_eq!(get("z_max_dev").parse::<f64>().unwrap(), out.metrics.z_max_dev);
}

#[test]
fn replaying_a_recorded_wind_reproduces_the_run() {
    let (cfg, out) = short_run(3.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wind.csv");
    emit_csv(&out.trajectory, &trajectory_metadata(&cfg), &path).unwrap();
    let mut replay = cfg.clone();
    replay.wind.seed = 99;
    replay.wind_trace = Some(read_wind_trace(&path).unwrap());
    let again = run_scenario(&replay).unwrap();
    assert_eq!(again.trajectory.column("w"), out.trajectory.column("w"));
    assert_eq!(again.trajectory.column("z"), out.trajectory.column("z"));
}
