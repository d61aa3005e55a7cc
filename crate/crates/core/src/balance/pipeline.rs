use super::{
    apply_refinement, assign_weights_on, balance_diffusive_traced, balance_greedy_global_traced, balance_sfc_traced,
    decide_refinement, inherit_assignment, BalancerKind, RefinementThresholds, WeightSource,
};
use crate::error::Result;
use crate::metrics::max_load;
use crate::scenario::{particles_per_leaf, ParticleSet};
use crate::sfc::{order_leaves, CurveKind};
use crate::simcluster::{account_balancer_memory, account_balancer_runtime, migrate, Cluster, CostModel};

/// The scenario state weights are computed from.
#[derive(Debug, Clone, Copy)]
pub struct WeightSourceState<'a> {
    pub source: WeightSource,
    pub particles: &'a ParticleSet,
}

/// Refinement thresholds, either fixed or relative to the current mean rank
/// load (`refine_above = factor · total/p`, `coarsen_below` a sixteenth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    Fixed(RefinementThresholds),
    Relative { refine_factor: f64 },
}

impl From<RefinementThresholds> for ThresholdRule {
    fn from(t: RefinementThresholds) -> Self {
        ThresholdRule::Fixed(t)
    }
}

impl ThresholdRule {
    pub fn resolve(&self, total: u64, p: u32) -> Result<RefinementThresholds> {
        let t = match *self {
            ThresholdRule::Fixed(t) => t,
            ThresholdRule::Relative { refine_factor } => RefinementThresholds::from_average(total, p, refine_factor),
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub balancer: BalancerKind,
    pub leaves_before: usize,
    pub leaves_after: usize,
    pub refined: usize,
    pub coarsened: usize,
    pub l_max_before: u64,
    pub l_max_after: u64,
    pub l_avg: f64,
    pub total_weight: u64,
    pub blocks_moved: u64,
    pub bytes_moved: u64,
    /// Messages sent during balancing and migration, all ranks.
    pub msgs: u64,
    pub mem_bytes_max_rank: u64,
    pub balancer_work_max_rank: u64,
    pub t_weights: f64,
    pub t_refine: f64,
    pub t_balance: f64,
    pub t_migrate: f64,
    pub t_lbp: f64,
}

/// Weights, threshold refinement with 2:1 repair, redistribution with
/// `kind`, and migration, applied to `cluster` in place.
pub fn run_pipeline(
    cluster: &mut Cluster,
    kind: BalancerKind,
    rule: ThresholdRule,
    state: WeightSourceState<'_>,
    m: &CostModel,
) -> Result<PipelineReport> {
    let p = cluster.p;
    let msgs_at_start: u64 = cluster.counters.messages.iter().sum();
    let leaves_before = cluster.forest.len();

    let weights = assign_weights_on(&cluster.forest, cluster.graph(), state.source, state.particles);
    let l_max_before = max_load(&cluster.assignment, &weights).l_max;
    let total = weights.total();
    let own_max = cluster.assignment.leaves_per_rank().into_iter().max().unwrap_or(0) as f64;
    let t_weights = m.c_balance * own_max;

    let known = cluster.rank_graph();
    let thresholds = rule.resolve(total, p)?;
    let plan = decide_refinement(&cluster.forest, &weights, &thresholds);
    let (forest, assignment) = if plan.is_empty() {
        (cluster.forest.clone(), cluster.assignment.clone())
    } else {
        let f = apply_refinement(&cluster.forest, &plan)?;
        let a = inherit_assignment(&cluster.assignment, &f)?;
        (f, a)
    };
    let touched = 8 * (plan.refine.len() + plan.coarsen.len()) + forest.len().abs_diff(leaves_before);
    let t_refine = m.c_balance * touched as f64;
    if plan.is_empty() {
        cluster.payload = Some(particles_per_leaf(state.particles, &forest));
        cluster.weights = weights;
    } else {
        let g = forest.leaf_graph();
        let weights = assign_weights_on(&forest, &g, state.source, state.particles);
        cluster.payload = Some(particles_per_leaf(state.particles, &forest));
        cluster.replace_forest_on(forest, g, assignment, weights)?;
    }

    let mem = account_balancer_memory(cluster, kind, m);
    let (next, trace) = match kind {
        BalancerKind::SfcMorton | BalancerKind::SfcHilbert => {
            let curve = if kind == BalancerKind::SfcMorton { CurveKind::Morton } else { CurveKind::Hilbert };
            balance_sfc_traced(&order_leaves(&cluster.forest, curve), &cluster.weights, p)?
        }
        BalancerKind::Diffusive {
            iterations,
            flow_iterations,
        } => balance_diffusive_traced(
            cluster.graph(),
            &cluster.assignment,
            &cluster.weights,
            iterations,
            flow_iterations,
            Some(&known),
        )?,
        BalancerKind::GreedyGlobal => balance_greedy_global_traced(&cluster.weights, p)?,
    };
    let work = account_balancer_runtime(cluster, &trace, m);
    let work_max = work.iter().copied().max().unwrap_or(0);
    let gathered = trace.allgather_records.iter().copied().max().unwrap_or(0);
    let mut sent = vec![0u64; p as usize];
    for (&(from, _), &n) in &trace.messages {
        sent[from as usize] += n;
    }
    let sent_max = sent.into_iter().max().unwrap_or(0);
    let t_balance = m.c_balance * work_max as f64
        + m.c_latency * (gathered + sent_max) as f64
        + (gathered * m.bytes_per_weight_record) as f64 / m.bandwidth;

    let migration = migrate(cluster, next, m)?;
    let after = max_load(&cluster.assignment, &cluster.weights);
    let t_lbp = t_weights + t_refine + t_balance + migration.time;
    let msgs_at_end: u64 = cluster.counters.messages.iter().sum();

    Ok(PipelineReport {
        balancer: kind,
        leaves_before,
        leaves_after: cluster.forest.len(),
        refined: plan.refine.len(),
        coarsened: plan.coarsen.len(),
        l_max_before,
        l_max_after: after.l_max,
        l_avg: after.l_avg,
        total_weight: total,
        blocks_moved: migration.blocks_moved,
        bytes_moved: migration.bytes_moved,
        msgs: msgs_at_end - msgs_at_start,
        mem_bytes_max_rank: mem.into_iter().max().unwrap_or(0),
        balancer_work_max_rank: work_max,
        t_weights,
        t_refine,
        t_balance,
        t_migrate: migration.time,
        t_lbp,
    })
}
