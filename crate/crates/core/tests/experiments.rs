use forestlb::experiment::{run_hopper_experiment, run_static_experiment, run_sweep, validate_config};
use forestlb::metrics::{experiment_csv, hopper_csv, log_log_slope, plot_points, report_csv, CSV_HEADER, HOPPER_CSV_HEADER};

#[test]
fn single_rank_has_unit_gain() {
    let cfg = validate_config("scenario = \"static\"\np_sweep = [1]\nbalancers = [\"sfc_hilbert\", \"diffusive\", \"greedy\"]").unwrap();
    let rows = run_static_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.eta, 1.0, "{}", r.balancer);
        assert_eq!(r.blocks_moved, 0);
        assert_eq!(r.l_max_before, r.l_max_after);
    }
}

#[test]
fn eighth_fill_row_is_granularity_limited() {
    let cfg = validate_config("scenario = \"static\"\nbalancers = [\"sfc_hilbert\"]").unwrap();
    let rows = run_static_experiment(&cfg).unwrap();
    let r = &rows[0];
    assert_eq!((r.p, r.l_max_before), (128, 89_856));
    // no rank carries more than its share plus one fine leaf
    assert!((r.l_max_after as f64) < r.l_avg + 89_856.0 / 8.0);
    assert!(r.eta > 4.0);
}

#[test]
fn static_csv_is_deterministic() {
    let text = "scenario = \"static\"\np_sweep = [128, 256]\nbalancers = [\"sfc_hilbert\", \"sfc_morton\", \"diffusive\", \"greedy\"]\nwindow = 5";
    let a = experiment_csv(&run_sweep(&validate_config(text).unwrap()).unwrap());
    let b = experiment_csv(&run_sweep(&validate_config(text).unwrap()).unwrap());
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 8);
}

#[test]
fn rows_come_balancer_major() {
    let cfg = validate_config("scenario = \"static\"\np_sweep = [128, 256]\nbalancers = [\"sfc_morton\", \"greedy\"]\nwindow = 2").unwrap();
    let rows = run_sweep(&cfg).unwrap();
    let keys: Vec<(String, u32)> = rows.iter().map(|r| (r.balancer.clone(), r.p)).collect();
    assert_eq!(
        keys,
        vec![("sfc_morton".into(), 128), ("sfc_morton".into(), 256), ("greedy_global".into(), 128), ("greedy_global".into(), 256)]
    );
}

#[test]
fn weak_scaling_rows_feed_slopes() {
    let cfg = validate_config(
        "scenario = \"static\"\np_sweep = [8, 64, 512]\nbalancers = [\"sfc_hilbert\", \"diffusive\"]\nwindow = 1\n[static]\nlayout = \"cube\"\nleaf_depth = 1\n[thresholds]\nrefine_above = 1e15\ncoarsen_below = 0.0",
    )
    .unwrap();
    let rows = run_sweep(&cfg).unwrap();
    for r in &rows {
        assert_eq!(r.leaves, 8 * r.p as usize);
    }
    let sfc: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.balancer == "sfc_hilbert")
        .map(|r| (r.p as f64, r.balancer_work_max_rank as f64))
        .collect();
    assert!((log_log_slope(&sfc) - 1.0).abs() < 0.05);
    let diff: Vec<u64> = rows.iter().filter(|r| r.balancer != "sfc_hilbert").map(|r| r.mem_bytes_max_rank).collect();
    let sfc_mem: Vec<u64> = rows.iter().filter(|r| r.balancer == "sfc_hilbert").map(|r| r.mem_bytes_max_rank).collect();
    assert_eq!(sfc_mem, vec![64 * 16, 512 * 16, 4096 * 16]);
    assert!(diff.iter().all(|&m| m <= (8 + 26) * 16 * 2));
    assert_eq!(plot_points(&rows).len(), 2 * rows.len());
}

#[test]
fn report_csv_round_trips() {
    let cfg = validate_config("scenario = \"static\"\nbalancers = [\"sfc_hilbert\"]\nwindow = 1").unwrap();
    let rows = run_static_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    report_csv(&rows, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), experiment_csv(&rows));
}

#[test]
fn hopper_without_steps_emits_initial_rows() {
    let cfg = validate_config("scenario = \"hopper\"\ntotal_steps = 0\nbalancers = [\"sfc_hilbert\", \"diffusive\"]").unwrap();
    let rows = run_hopper_experiment(&cfg).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.balancer.as_str()).collect();
    assert_eq!(names, vec!["unbalanced", "sfc_hilbert", "diffusive(10)"]);
    for r in &rows {
        assert_eq!(r.step, 0);
        assert_eq!(r.leaves, 64);
        assert_eq!(r.in_tank, 0);
        assert_eq!(r.l_max, rows[0].l_max);
    }
    let csv = hopper_csv(&rows);
    assert_eq!(csv.lines().next().unwrap(), HOPPER_CSV_HEADER.join(","));
}

#[test]
fn short_hopper_run_balances_and_repeats() {
    let text = "scenario = \"hopper\"\ntotal_steps = 200\nbalancers = [\"sfc_hilbert\"]\n[hopper]\nscale = 0.6";
    let rows = run_hopper_experiment(&validate_config(text).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 3);
    let (control, balanced) = rows.split_at(3);
    for (c, b) in control.iter().zip(balanced) {
        assert_eq!((c.step, c.contacts), (b.step, b.contacts));
    }
    assert!(control.iter().all(|r| r.blocks_moved == 0 && r.leaves == 64));
    for (c, b) in control.iter().zip(balanced).skip(1) {
        assert!(b.l_max < c.l_max, "step {}: {} vs {}", c.step, b.l_max, c.l_max);
    }
    assert_eq!(hopper_csv(&rows), hopper_csv(&run_hopper_experiment(&validate_config(text).unwrap()).unwrap()));
}
