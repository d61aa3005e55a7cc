//! Batch experiments: static weak-scaling sweeps and hopper time series on
//! the simulated cluster.

mod config;

use std::collections::BTreeMap;

pub use config::{load_config, root_grid, validate_config, ExperimentConfig, HopperSection, Layout, ScenarioKind, StaticSection, ThresholdSection};

use crate::balance::{assign_weights, assign_weights_on, run_pipeline, RankAssignment, WeightSource, WeightSourceState};
use crate::error::{Error, Result};
use crate::forest::{BlockId, Forest};
use crate::metrics::{max_load, performance_gain, window_mean, ExperimentRow, HopperRow};
use crate::scenario::{for_each_contact, HopperState, ParticleSet, StaticScenarioConfig};
use crate::simcluster::{init_cluster, init_cluster_on, windowed_step_time, Cluster, CostModel};

/// The static box fill for `p` ranks: forest with `8^leaf_depth` leaves per
/// rank and the particles.
pub fn static_setup(s: &StaticSection, p: u32) -> Result<(Forest, ParticleSet)> {
    let (roots, level) = root_grid(s.layout, p)?;
    let cfg = StaticScenarioConfig::commensurate(roots, level, s.periods_per_leaf, s.particle_radius, s.fill_fraction, s.gravity_edge)?;
    let particles = cfg.generate_hcp_fill()?;
    let forest = Forest::create(roots, cfg.domain, level + s.leaf_depth)?;
    Ok((forest, particles))
}

fn static_cluster(forest: &Forest, particles: &ParticleSet, source: WeightSource, p: u32) -> Result<Cluster> {
    let a = RankAssignment::id_chunks(forest, p)?;
    let g = forest.leaf_graph();
    let w = assign_weights_on(forest, &g, source, particles);
    init_cluster_on(forest.clone(), g, a, w, p)
}

/// One row per (balancer, p): baseline window, one pipeline run, window
/// after balancing.
pub fn run_static_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if cfg.scenario != ScenarioKind::Static {
        return Err(Error::config("scenario", "run_static_experiment needs scenario = \"static\""));
    }
    cfg.validate()?;
    let source = WeightSource::Particles {
        scale: cfg.static_scenario.weight_scale,
    };
    let setups: Vec<(u32, Cluster, ParticleSet)> = cfg
        .p_sweep
        .iter()
        .map(|&p| {
            let (f, q) = static_setup(&cfg.static_scenario, p)?;
            Ok((p, static_cluster(&f, &q, source, p)?, q))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &kind in &cfg.balancers {
        for (p, base, particles) in &setups {
            let mut c = base.clone();
            let before = windowed_step_time(&mut c, &cfg.cost_model, cfg.window);
            let report = run_pipeline(&mut c, kind, cfg.threshold_rule(), WeightSourceState { source, particles }, &cfg.cost_model)?;
            let after = windowed_step_time(&mut c, &cfg.cost_model, cfg.window);
            rows.push(ExperimentRow {
                scenario: "static".into(),
                balancer: kind.to_string(),
                p: *p,
                leaves: report.leaves_after,
                l_max_before: report.l_max_before,
                l_max_after: report.l_max_after,
                l_avg: report.l_avg,
                eta: performance_gain(before, after)?,
                t_lbp: report.t_lbp,
                blocks_moved: report.blocks_moved,
                msgs: report.msgs,
                mem_bytes_max_rank: report.mem_bytes_max_rank,
                balancer_work_max_rank: report.balancer_work_max_rank,
            });
        }
    }
    Ok(rows)
}

/// Weak-scaling sweep: the static experiment over every configured p, rows
/// ordered by balancer and then p.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    run_static_experiment(cfg)
}

/// Contact midpoints of the current particle positions.
fn contact_midpoints(p: &ParticleSet) -> Vec<[f64; 3]> {
    let mut mids = Vec::new();
    for_each_contact(p, |i, j| {
        let (a, b) = (p.positions[i], p.positions[j]);
        mids.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]);
    });
    mids
}

/// Per-sample statistics of one run.
#[derive(Debug, Clone, Copy, Default)]
struct Sample {
    l_max: f64,
    l_avg: f64,
    max_leaf: f64,
    step_time: f64,
}

/// One hopper run: the unbalanced control (`kind = None`) or a balancer.
struct HopperRun {
    name: String,
    kind: Option<crate::balance::BalancerKind>,
    cluster: Cluster,
    window: Vec<Sample>,
}

impl HopperRun {
    fn sample(&mut self, mids: &[[f64; 3]], m: &CostModel) {
        let c = &mut self.cluster;
        let mut comp: BTreeMap<BlockId, u64> = c.forest.leaves().iter().map(|&id| (id, 0)).collect();
        for &q in mids {
            if let Some(id) = c.forest.locate(q) {
                *comp.get_mut(&id).expect("leaf") += 1;
            }
        }
        c.weights.comp = comp;
        let s = max_load(&c.assignment, &c.weights);
        let step_time = windowed_step_time(c, m, 1);
        self.window.push(Sample {
            l_max: s.l_max as f64,
            l_avg: s.l_avg,
            max_leaf: c.weights.max_leaf() as f64,
            step_time,
        });
    }
}

/// Steps the hopper mover once and replays every run against the shared
/// trajectory. Every `rebalance_interval` steps (and at step 0) each run
/// emits a row with its statistics averaged over the samples since the last
/// row, then balanced runs execute the pipeline on the current contacts.
pub fn run_hopper_experiment(cfg: &ExperimentConfig) -> Result<Vec<HopperRow>> {
    if cfg.scenario != ScenarioKind::Hopper {
        return Err(Error::config("scenario", "run_hopper_experiment needs scenario = \"hopper\""));
    }
    cfg.validate()?;
    let hc = cfg.hopper_config();
    let mut state = HopperState::generate(&hc)?;
    let roots = cfg.hopper.root_dims;
    let forest = Forest::create(roots, hc.domain(), 0)?;
    let p = forest.len() as u32;
    let source = WeightSource::contacts();
    let a = RankAssignment::round_robin(&forest, p)?;
    let w = assign_weights(&forest, source, &state.particles);
    let base = init_cluster(forest, a, w, p)?;

    let mut runs = vec![HopperRun {
        name: "unbalanced".into(),
        kind: None,
        cluster: base.clone(),
        window: Vec::new(),
    }];
    for &k in &cfg.balancers {
        runs.push(HopperRun {
            name: k.to_string(),
            kind: Some(k),
            cluster: base.clone(),
            window: Vec::new(),
        });
    }

    let mut per_run: Vec<Vec<HopperRow>> = vec![Vec::new(); runs.len()];
    let m = &cfg.cost_model;
    let interval = cfg.rebalance_interval;
    let every = cfg.hopper.sample_every;
    for step in 0..=cfg.total_steps {
        let boundary = step % interval == 0;
        if boundary || step % every == 0 {
            let mids = contact_midpoints(&state.particles);
            for run in runs.iter_mut() {
                run.sample(&mids, m);
            }
            if boundary {
                for (k, run) in runs.iter_mut().enumerate() {
                    let mean = |f: fn(&Sample) -> f64| window_mean(&run.window.iter().map(f).collect::<Vec<_>>(), run.window.len());
                    let mut row = HopperRow {
                        balancer: run.name.clone(),
                        step,
                        contacts: mids.len() as u64,
                        leaves: run.cluster.forest.len(),
                        l_max: mean(|s| s.l_max).round() as u64,
                        l_avg: mean(|s| s.l_avg),
                        max_leaf: mean(|s| s.max_leaf),
                        step_time: mean(|s| s.step_time),
                        blocks_moved: 0,
                        in_tank: state.in_tank_count(),
                    };
                    run.window.clear();
                    if let Some(kind) = run.kind {
                        let report = run_pipeline(
                            &mut run.cluster,
                            kind,
                            cfg.threshold_rule(),
                            WeightSourceState {
                                source,
                                particles: &state.particles,
                            },
                            m,
                        )?;
                        row.blocks_moved = report.blocks_moved;
                    }
                    per_run[k].push(row);
                }
            }
        }
        if step < cfg.total_steps {
            state.step(hc.dt)?;
        }
    }
    Ok(per_run.into_iter().flatten().collect())
}
