use faultsim::config::{dump_config, parse_config, RunConfig};
use faultsim::HarnessError;
use faultsim_core::allocator::AllocatorMode;
use faultsim_core::plant::FaultProfile;
use faultsim_core::scenario::ScenarioConfig;

fn config_err(text: &str) -> faultsim::ConfigError {
    match parse_config(text) {
        Err(HarnessError::Config(e)) => e,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn empty_file_gives_the_reference_scenario() {
    let run = parse_config("").unwrap();
    assert_eq!(run, RunConfig::default());
    assert_eq!(run.scenario, ScenarioConfig::default());
    let comments_only = parse_config("# nothing here\n; nor here\n\n").unwrap();
    assert_eq!(comments_only, run);
}

#[test]
fn strict_mode_rejects_k1_below_threshold() {
    match parse_config("[scenario]\nstrict = true\n[gains]\nk1 = 58\n") {
        Err(HarnessError::GainCheck(msg)) => assert!(msg.contains("k1"), "{msg}"),
        other => panic!("expected a gain failure, got {other:?}"),
    }
    // non-strict: accepted, the run reports a warning instead
    assert_eq!(parse_config("[gains]\nk1 = 58\n").unwrap().scenario.high.k1, 58.0);
}

#[test]
fn wind_bound_invariant_points_at_the_key() {
    let e = config_err("[wind]\nsigma = 0.5\nw_min = 30\n");
    assert_eq!(e.line, Some(3));
    assert_eq!(e.key, "wind.w_min");
    assert!(e.to_string().starts_with("line 3: wind.w_min:"), "{e}");
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    let e = config_err("[gains]\nk1 = 61\nk3 = 2\n");
    assert_eq!((e.line, e.key.as_str()), (Some(3), "gains.k3"));
    let e = config_err("\n[turbine]\nk = 1\n");
    assert_eq!((e.line, e.key.as_str()), (Some(3), "turbine"));
    let e = config_err("k1 = 61\n");
    assert_eq!(e.line, Some(1));
}

#[test]
fn type_mismatches_are_located() {
    let e = config_err("[grid]\ndt = fast\n");
    assert_eq!((e.line, e.key.as_str()), (Some(2), "grid.dt"));
    let e = config_err("[allocator]\nhysteresis = yes\n");
    assert_eq!(e.key, "allocator.hysteresis");
    let e = config_err("[gains]\nl0 = 1, x, 1\n");
    assert_eq!(e.key, "gains.l0");
    let e = config_err("[wind]\nseed = -4\n");
    assert_eq!(e.key, "wind.seed");
    let e = config_err("[grid]\ndt = 0.01\ndt = 0.02\n");
    assert!(e.message.contains("duplicate"));
}

#[test]
fn dimension_mismatch_is_reported_against_the_list() {
    let e = config_err("[gains]\nk2 = 50, 1, 50, 1\n");
    assert_eq!(e.key, "gains.k2");
    // changing the actuator count resizes the defaults
    let run = parse_config("[actuators]\ncount = 4\n[faults]\npreset = none\n").unwrap();
    assert_eq!(run.scenario.high.l0.len(), 4);
    assert_eq!(run.scenario.low.k2.len(), 8);
}

#[test]
fn fault_sections_replace_the_preset() {
    let text = "[fault.1]\nactuator = 1\nt_on = 10\nt_off = 20\n\n[fault.2]\nactuator = 2\nt_on = 30\nt_off = 40\nprofile = ramp\nramp_time = 2\nwn2 = 60\n";
    let run = parse_config(text).unwrap();
    let ev = &run.scenario.faults.events;
    assert_eq!(ev.len(), 2);
    assert_eq!(ev[0].actuator, 0);
    assert_eq!(ev[1].profile, FaultProfile::Ramp { ramp_time: 2.0 });
    assert_eq!(ev[1].target.wn2, 60.0);
    let e = config_err("[fault.1]\nactuator = 4\nt_on = 1\nt_off = 2\n");
    assert!(e.key.starts_with("fault"), "{e}");
    let e = config_err("[fault.1]\nt_on = 1\nt_off = 2\n");
    assert_eq!(e.key, "fault.1.actuator");
    assert!(parse_config("[faults]\npreset = none\n").unwrap().scenario.faults.events.is_empty());
}

#[test]
fn allocator_modes() {
    let run = parse_config("[allocator]\nmode = known\nknown_faulty = 3\n").unwrap();
    assert_eq!(run.scenario.allocator.mode, AllocatorMode::KnownFaultSet(vec![2]));
    let run = parse_config("[allocator]\nmode = uniform\n").unwrap();
    assert_eq!(run.scenario.allocator.mode, AllocatorMode::Uniform);
    assert!(parse_config("[allocator]\nknown_faulty = 1\n").is_err());
    assert!(parse_config("[allocator]\nmode = greedy\n").is_err());
}

#[test]
fn dump_round_trips() {
    let text = "[scenario]\nname = probe\n[gains]\nk1 = 70\n[allocator]\nmode = known\nknown_faulty = 1, 3\n[rotor]\nz_init = 1.2\n[output]\nsvg = false\ncsv = none\n[fault.1]\nactuator = 2\nt_on = 5\nt_off = 9\nprofile = ramp\nramp_time = 1.5\n";
    for run in [RunConfig::default(), parse_config(text).unwrap()] {
        let dumped = dump_config(&run);
        assert_eq!(parse_config(&dumped).unwrap(), run, "{dumped}");
    }
}

#[test]
fn reference_constants_appear_verbatim_in_the_dump() {
    let dump = dump_config(&RunConfig::default());
    for line in [
        "k1 = 61", "gamma = 0.3", "alpha = 3", "h_bar_z = 2.54", "l_bar_w = 7.8", "eta = 1",
        "k2 = 50, 1, 50, 1, 50, 1", "af = 20", "mu0 = 50", "k0 = 50", "wn2 = 123.4321", "two_zeta_wn = 13.332",
        "wn2 = 11.6964", "two_zeta_wn = 3.078", "t_on = 75", "t_off = 125", "w0 = 22", "z0 = 1.267",
        "d_omega = 111.7357", "d_zeta = 10.254", "m1 = 5.4184", "m2 = 0.0682", "m3 = 0.029",
        "inertia = 43784700", "p0 = 5296610", "c = 960000", "actuator = 3",
    ] {
        assert!(dump.lines().any(|l| l == line), "missing `{line}`");
    }
}
