//! A deterministic stand-in for `p` message-passing ranks.
//!
//! Ranks are logical: a step costs each rank its compute load, the interface
//! area it shares with other ranks and one latency per neighbor rank, and the
//! step time is the slowest rank. Memory and balancer work are accounted from
//! what each rank would hold and do, not measured.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::balance::{rank_graph_from, BalanceTrace, BalancerKind, RankAssignment, WeightMap};
use crate::error::{Error, Result};
use crate::forest::{BlockId, Forest, LeafGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Seconds per work unit of computation.
    pub c_comp: f64,
    /// Seconds per unit of interface area exchanged each step.
    pub c_comm: f64,
    /// Seconds per message.
    pub c_latency: f64,
    pub bytes_per_block_record: u64,
    pub bytes_per_weight_record: u64,
    /// Migration payload per particle of a moved leaf.
    pub bytes_per_particle: u64,
    /// Bytes per second for migration traffic.
    pub bandwidth: f64,
    /// Seconds per balancer work unit (comparisons and moves).
    pub c_balance: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            c_comp: 1e-5,
            c_comm: 1e-7,
            c_latency: 1e-6,
            bytes_per_block_record: 64,
            bytes_per_weight_record: 16,
            bytes_per_particle: 56,
            bandwidth: 2e9,
            c_balance: 1e-8,
        }
    }
}

impl CostModel {
    /// Step time is exactly `c_comp · l_max`.
    pub fn compute_only() -> Self {
        CostModel {
            c_comm: 0.0,
            c_latency: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_comp", self.c_comp),
            ("c_comm", self.c_comm),
            ("c_latency", self.c_latency),
            ("c_balance", self.c_balance),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("cost_model.{name}"), format!("{v} must be a finite non-negative number")));
            }
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::config("cost_model.bandwidth", "must be positive"));
        }
        Ok(())
    }
}

/// Monotone per-rank tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub messages: Vec<u64>,
    pub message_bytes: Vec<u64>,
    pub peak_memory: Vec<u64>,
    pub balancer_work: Vec<u64>,
}

impl Counters {
    fn zeroed(p: u32) -> Self {
        let z = vec![0; p as usize];
        Counters {
            messages: z.clone(),
            message_bytes: z.clone(),
            peak_memory: z.clone(),
            balancer_work: z,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub p: u32,
    pub forest: Forest,
    pub assignment: RankAssignment,
    pub weights: WeightMap,
    pub counters: Counters,
    /// Particles per leaf, when a scenario is attached; adds payload to
    /// migrations.
    pub payload: Option<BTreeMap<BlockId, u64>>,
    graph: LeafGraph,
}

pub fn init_cluster(forest: Forest, assignment: RankAssignment, weights: WeightMap, p: u32) -> Result<Cluster> {
    let graph = forest.leaf_graph();
    init_cluster_on(forest, graph, assignment, weights, p)
}

/// `init_cluster` with the forest's leaf graph already built.
pub(crate) fn init_cluster_on(forest: Forest, graph: LeafGraph, assignment: RankAssignment, weights: WeightMap, p: u32) -> Result<Cluster> {
    if p == 0 {
        return Err(Error::Domain("number of ranks must be positive".into()));
    }
    if assignment.p != p {
        return Err(Error::Consistency(format!("assignment is for {} ranks, cluster has {p}", assignment.p)));
    }
    assignment.check_covers(&forest)?;
    if weights.comp.len() != forest.len() || !forest.leaves().iter().all(|id| weights.comp.contains_key(id)) {
        return Err(Error::Consistency("weights do not cover the forest leaves".into()));
    }
    Ok(Cluster {
        p,
        forest,
        assignment,
        weights,
        counters: Counters::zeroed(p),
        payload: None,
        graph,
    })
}

/// Leaves moved by one migration and what it cost.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MigrationReport {
    pub blocks_moved: u64,
    pub bytes_moved: u64,
    /// Distinct `(sender, receiver)` pairs.
    pub pairs: BTreeSet<(u32, u32)>,
    pub time: f64,
}

impl Cluster {
    pub fn graph(&self) -> &LeafGraph {
        &self.graph
    }

    /// Swap in a refined forest with an assignment and weights covering it.
    pub fn replace_forest(&mut self, forest: Forest, assignment: RankAssignment, weights: WeightMap) -> Result<()> {
        let graph = forest.leaf_graph();
        self.replace_forest_on(forest, graph, assignment, weights)
    }

    pub(crate) fn replace_forest_on(&mut self, forest: Forest, graph: LeafGraph, assignment: RankAssignment, weights: WeightMap) -> Result<()> {
        assignment.check_covers(&forest)?;
        if assignment.p != self.p {
            return Err(Error::Consistency("assignment rank count changed".into()));
        }
        self.graph = graph;
        self.forest = forest;
        self.assignment = assignment;
        self.weights = weights;
        Ok(())
    }

    pub fn loads(&self) -> Vec<u64> {
        self.assignment.loads(&self.weights)
    }

    /// Interface area each rank shares with leaves of other ranks.
    pub fn cut_areas(&self) -> Vec<f64> {
        let mut area = vec![0.0; self.p as usize];
        let owners: Vec<u32> = self.graph.leaves.iter().map(|id| self.assignment.owner[id]).collect();
        for (i, nbrs) in self.graph.adj.iter().enumerate() {
            for &(j, a) in nbrs {
                if owners[i] != owners[j] {
                    area[owners[i] as usize] += a;
                }
            }
        }
        area
    }

    pub fn rank_graph(&self) -> Vec<BTreeSet<u32>> {
        rank_graph_from(&self.graph, &self.assignment)
    }

    /// Per-rank step time; pure.
    pub fn rank_step_times(&self, m: &CostModel) -> Vec<f64> {
        let loads = self.loads();
        let areas = self.cut_areas();
        let graph = self.rank_graph();
        (0..self.p as usize)
            .map(|r| m.c_comp * loads[r] as f64 + m.c_comm * areas[r] + m.c_latency * graph[r].len() as f64)
            .collect()
    }
}

/// One step: every rank computes, then exchanges one message with each
/// neighbor rank. Returns the slowest rank's time.
pub fn simulate_timestep(c: &mut Cluster, m: &CostModel) -> f64 {
    windowed_step_time(c, m, 1)
}

/// Mean step time over `steps` steps. Nothing moves between steps, so every
/// step of the window costs the same.
pub fn windowed_step_time(c: &mut Cluster, m: &CostModel, steps: u32) -> f64 {
    let n = steps.max(1) as u64;
    let t_max = c.rank_step_times(m).into_iter().fold(0.0, f64::max);
    for (r, nbrs) in c.rank_graph().iter().enumerate() {
        c.counters.messages[r] += n * nbrs.len() as u64;
    }
    t_max
}

pub fn migrate(c: &mut Cluster, new: RankAssignment, m: &CostModel) -> Result<MigrationReport> {
    new.check_covers(&c.forest)?;
    if new.p != c.p {
        return Err(Error::Consistency(format!("assignment is for {} ranks, cluster has {}", new.p, c.p)));
    }
    let mut report = MigrationReport::default();
    for (id, &from) in &c.assignment.owner {
        let to = new.owner[id];
        if to == from {
            continue;
        }
        report.blocks_moved += 1;
        let particles = c.payload.as_ref().and_then(|p| p.get(id)).copied().unwrap_or(0);
        let bytes = m.bytes_per_block_record + particles * m.bytes_per_particle;
        report.bytes_moved += bytes;
        report.pairs.insert((from, to));
        c.counters.message_bytes[from as usize] += bytes;
    }
    for &(from, _) in &report.pairs {
        c.counters.messages[from as usize] += 1;
    }
    report.time = m.c_latency * report.pairs.len() as f64 + report.bytes_moved as f64 / m.bandwidth;
    c.assignment = new;
    Ok(report)
}

/// Bytes each rank holds while running `kind` on the current state: global
/// balancers keep every leaf's weight, the diffusive one only its own leaves
/// and one summary per neighbor rank.
pub fn account_balancer_memory(c: &mut Cluster, kind: BalancerKind, m: &CostModel) -> Vec<u64> {
    let bytes: Vec<u64> = if kind.is_global() {
        vec![c.forest.len() as u64 * m.bytes_per_weight_record; c.p as usize]
    } else {
        let own = c.assignment.leaves_per_rank();
        let graph = c.rank_graph();
        (0..c.p as usize).map(|r| (own[r] + graph[r].len()) as u64 * m.bytes_per_weight_record).collect()
    };
    for (peak, &b) in c.counters.peak_memory.iter_mut().zip(&bytes) {
        *peak = (*peak).max(b);
    }
    bytes
}

/// Charges a balancer run's work and traffic to the ranks; returns the work.
pub fn account_balancer_runtime(c: &mut Cluster, trace: &BalanceTrace, m: &CostModel) -> Vec<u64> {
    for r in 0..c.p as usize {
        c.counters.balancer_work[r] += trace.work[r];
        c.counters.messages[r] += trace.allgather_records[r];
        c.counters.message_bytes[r] += trace.allgather_records[r] * m.bytes_per_weight_record;
    }
    for (&(from, _), &n) in &trace.messages {
        c.counters.messages[from as usize] += n;
        c.counters.message_bytes[from as usize] += n * m.bytes_per_weight_record;
    }
    trace.work.clone()
}

#[cfg(test)]
mod tests;
