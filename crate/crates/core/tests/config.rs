use forestlb::balance::{BalancerKind, ThresholdRule};
use forestlb::experiment::{load_config, validate_config, Layout, ScenarioKind};
use forestlb::Error;

fn field_of(e: Error) -> String {
    match e {
        Error::Config { field, .. } => field,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn minimal_static_config_takes_defaults() {
    let cfg = validate_config("scenario = \"static\"\n").unwrap();
    assert_eq!(cfg.scenario, ScenarioKind::Static);
    assert_eq!(cfg.p_sweep, vec![128]);
    assert_eq!(
        cfg.balancers,
        vec![BalancerKind::SfcHilbert, BalancerKind::SfcMorton, BalancerKind::diffusive(10)]
    );
    assert_eq!(cfg.window, 100);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.static_scenario.fill_fraction, 0.125);
    assert_eq!(cfg.static_scenario.layout, Layout::Slab);
    assert_eq!(cfg.threshold_rule(), ThresholdRule::Relative { refine_factor: 2.0 });
}

#[test]
fn minimal_hopper_config_takes_defaults() {
    let cfg = validate_config("scenario = \"hopper\"").unwrap();
    assert_eq!(cfg.total_steps, 2000);
    assert_eq!(cfg.rebalance_interval, 100);
    assert_eq!(cfg.p_sweep, vec![64]);
}

#[test]
fn bare_diffusive_uses_configured_iterations() {
    let cfg = validate_config("scenario = \"static\"\niterations = 4\nflow_iterations = 7\nbalancers = [\"diffusive\", \"diffusive(3)\", \"greedy\"]").unwrap();
    assert_eq!(
        cfg.balancers,
        vec![
            BalancerKind::Diffusive { iterations: 4, flow_iterations: 7 },
            BalancerKind::Diffusive { iterations: 3, flow_iterations: 7 },
            BalancerKind::GreedyGlobal,
        ]
    );
}

#[test]
fn hysteresis_violation_names_both_thresholds() {
    let e = validate_config("scenario = \"static\"\n[thresholds]\nrefine_above = 100.0\ncoarsen_below = 50.0\n").unwrap_err();
    let f = field_of(e);
    assert!(f.contains("thresholds.coarsen_below") && f.contains("thresholds.refine_above"), "{f}");
}

#[test]
fn unknown_keys_are_rejected_with_line() {
    let e = validate_config("scenario = \"static\"\n[static]\nfill = 0.5\n").unwrap_err();
    match e {
        Error::Parse { line, message } => {
            assert_eq!(line, 3);
            assert!(message.contains("fill"), "{message}");
        }
        other => panic!("{other}"),
    }
    assert!(matches!(validate_config("scenario = \"static\"\nbogus = 1\n"), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn malformed_toml_reports_line() {
    match validate_config("scenario = \"static\"\np_sweep = [1,\nseed = ").unwrap_err() {
        Error::Parse { line, .. } => assert!(line >= 2),
        other => panic!("{other}"),
    }
}

#[test]
fn field_paths_point_at_the_bad_entry() {
    assert_eq!(field_of(validate_config("scenario = \"static\"\np_sweep = []").unwrap_err()), "p_sweep");
    assert_eq!(field_of(validate_config("scenario = \"static\"\np_sweep = [128, 0]").unwrap_err()), "p_sweep[1]");
    assert_eq!(field_of(validate_config("scenario = \"static\"\np_sweep = [100]").unwrap_err()), "p_sweep[0]");
    assert_eq!(
        field_of(validate_config("scenario = \"static\"\nbalancers = [\"sfc_hilbert\", \"metis\"]").unwrap_err()),
        "balancers[1]"
    );
    assert_eq!(
        field_of(validate_config("scenario = \"static\"\n[static]\nfill_fraction = 1.5").unwrap_err()),
        "static.fill_fraction"
    );
    assert_eq!(
        field_of(validate_config("scenario = \"static\"\n[cost_model]\nc_comp = -1.0").unwrap_err()),
        "cost_model.c_comp"
    );
    assert_eq!(
        field_of(validate_config("scenario = \"hopper\"\ntotal_steps = 50\nrebalance_interval = 100").unwrap_err()),
        "total_steps"
    );
}

#[test]
fn cube_layout_accepts_only_cubes() {
    assert!(validate_config("scenario = \"static\"\np_sweep = [1, 8, 64, 512]\n[static]\nlayout = \"cube\"").is_ok());
    assert_eq!(
        field_of(validate_config("scenario = \"static\"\np_sweep = [16]\n[static]\nlayout = \"cube\"").unwrap_err()),
        "p_sweep[0]"
    );
}

#[test]
fn full_scale_hopper_parameters_parse_and_scale() {
    let text = r#"
scenario = "hopper"
seed = 7

[hopper]
cone_half_angle = 45.0
orifice_radius = 46.0
lattice_spacing = 1.0
particle_radius = 0.5
dt = 0.01
tank_min = [-200.0, -200.0, 0.0]
tank_max = [200.0, 200.0, 40.0]
scale = 0.25
"#;
    let cfg = validate_config(text).unwrap();
    let h = cfg.hopper_config();
    assert_eq!(h.cone_half_angle, 45.0);
    assert_eq!(h.orifice_radius, 11.5);
    assert_eq!(h.lattice_spacing, 1.0);
    assert_eq!(h.particle_radius, 0.5);
    assert_eq!(h.dt, 0.01);
    assert_eq!(h.velocity_seed, 7);
    assert_eq!(h.tank.min, [-50.0, -50.0, 30.0]);
    assert_eq!(h.tank.max, [50.0, 50.0, 40.0]);
}

#[test]
fn config_loads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "scenario = \"static\"\np_sweep = [1]\n").unwrap();
    assert_eq!(load_config(&path).unwrap().p_sweep, vec![1]);
    assert!(matches!(load_config(&dir.path().join("missing.toml")), Err(Error::Io { .. })));
}
