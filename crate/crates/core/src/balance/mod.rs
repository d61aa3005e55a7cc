//! The three-stage load-balancing pipeline: weights, refinement, and
//! redistribution of leaves to ranks.
//!
//! Balancers are pure functions of forest, weights and the current
//! assignment. Each returns a [`BalanceTrace`] next to the new assignment so
//! the simulated cluster can charge work, memory and messages to ranks.

mod diffusive;
mod greedy;
mod pipeline;
mod sfc_cut;
mod weights;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use diffusive::{balance_diffusive, balance_diffusive_traced, DEFAULT_FLOW_ITERATIONS};
pub use greedy::{balance_greedy_global, balance_greedy_global_traced};
pub use pipeline::{run_pipeline, PipelineReport, ThresholdRule, WeightSourceState};
pub use sfc_cut::{balance_sfc, balance_sfc_traced, cut_loads};
pub use weights::{apply_refinement, assign_weights, decide_refinement, inherit_assignment, RefinementPlan, WeightSource};
pub(crate) use weights::assign_weights_on;

use crate::error::{Error, Result};
use crate::forest::{BlockId, Forest};
use crate::sfc::CurveKind;

/// Default number of diffusive rounds.
pub const DEFAULT_DIFFUSIVE_ITERATIONS: u32 = 10;

/// Per-leaf computational weights and per-pair interface areas.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightMap {
    pub comp: BTreeMap<BlockId, u64>,
    /// Keyed by `(a, b)` with `a < b`; only pairs sharing a face.
    pub comm: BTreeMap<(BlockId, BlockId), f64>,
}

impl WeightMap {
    pub fn total(&self) -> u64 {
        self.comp.values().sum()
    }

    pub fn max_leaf(&self) -> u64 {
        self.comp.values().copied().max().unwrap_or(0)
    }

    pub fn weight(&self, id: &BlockId) -> u64 {
        self.comp.get(id).copied().unwrap_or(0)
    }

    /// Weights for the leaves of `order`, in that order.
    pub fn ordered(&self, order: &[BlockId]) -> Vec<u64> {
        order.iter().map(|id| self.weight(id)).collect()
    }
}

/// Which rank owns which leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    pub p: u32,
    pub owner: BTreeMap<BlockId, u32>,
}

impl RankAssignment {
    pub fn new(p: u32, owner: BTreeMap<BlockId, u32>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Domain("number of ranks must be positive".into()));
        }
        if let Some((id, r)) = owner.iter().find(|(_, &r)| r >= p) {
            return Err(Error::Consistency(format!("leaf {id} owned by rank {r}, but p = {p}")));
        }
        Ok(RankAssignment { p, owner })
    }

    /// Everything on rank 0.
    pub fn single(forest: &Forest, p: u32) -> Result<Self> {
        Self::new(p, forest.leaves().iter().map(|&id| (id, 0)).collect())
    }

    /// Leaf `i` in block id order goes to rank `i mod p`; with as many
    /// leaves as ranks this is the 1:1 mapping of a fresh forest.
    pub fn round_robin(forest: &Forest, p: u32) -> Result<Self> {
        Self::new(p, forest.leaves().iter().enumerate().map(|(i, &id)| (id, (i % p as usize) as u32)).collect())
    }

    /// Leaves in block id order dealt out in equal-count contiguous chunks;
    /// with `8^k` leaves per rank each rank gets one whole subtree.
    pub fn id_chunks(forest: &Forest, p: u32) -> Result<Self> {
        let n = forest.len() as u64;
        Self::new(p, forest.leaves().iter().enumerate().map(|(i, &id)| (id, (i as u64 * p as u64 / n.max(1)) as u32)).collect())
    }

    /// Leaves in curve order dealt out in equal-count contiguous chunks.
    pub fn curve_chunks(forest: &Forest, kind: CurveKind, p: u32) -> Result<Self> {
        let order = crate::sfc::order_leaves(forest, kind);
        let n = order.len() as u64;
        Self::new(p, order.iter().enumerate().map(|(i, &id)| (id, (i as u64 * p as u64 / n.max(1)) as u32)).collect())
    }

    pub fn rank_of(&self, id: &BlockId) -> Option<u32> {
        self.owner.get(id).copied()
    }

    pub fn loads(&self, w: &WeightMap) -> Vec<u64> {
        let mut loads = vec![0u64; self.p as usize];
        for (id, &r) in &self.owner {
            loads[r as usize] += w.weight(id);
        }
        loads
    }

    pub fn leaves_per_rank(&self) -> Vec<usize> {
        let mut n = vec![0usize; self.p as usize];
        for &r in self.owner.values() {
            n[r as usize] += 1;
        }
        n
    }

    /// Errors unless the owned leaves are exactly the forest's leaves.
    pub fn check_covers(&self, forest: &Forest) -> Result<()> {
        if self.owner.len() != forest.len() || !forest.leaves().iter().all(|id| self.owner.contains_key(id)) {
            return Err(Error::Consistency(format!(
                "assignment covers {} leaves, forest has {}",
                self.owner.len(),
                forest.len()
            )));
        }
        Ok(())
    }

    /// Ranks adjacent through at least one pair of touching leaves.
    pub fn rank_graph(&self, forest: &Forest) -> Vec<BTreeSet<u32>> {
        let g = forest.leaf_graph();
        rank_graph_from(&g, self)
    }
}

pub(crate) fn rank_graph_from(g: &crate::forest::LeafGraph, a: &RankAssignment) -> Vec<BTreeSet<u32>> {
    let mut adj = vec![BTreeSet::new(); a.p as usize];
    let owners: Vec<u32> = g.leaves.iter().map(|id| a.owner[id]).collect();
    for (i, nbrs) in g.adj.iter().enumerate() {
        for &(j, _) in nbrs {
            let (ri, rj) = (owners[i], owners[j]);
            if ri != rj {
                adj[ri as usize].insert(rj);
            }
        }
    }
    adj
}

/// Weight bounds driving refinement and coarsening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementThresholds {
    pub refine_above: f64,
    pub coarsen_below: f64,
}

impl RefinementThresholds {
    pub fn new(refine_above: f64, coarsen_below: f64) -> Result<Self> {
        let t = RefinementThresholds {
            refine_above,
            coarsen_below,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.refine_above >= 0.0 && self.coarsen_below >= 0.0) {
            return Err(Error::config("thresholds", "refine_above and coarsen_below must be non-negative"));
        }
        if self.coarsen_below * 8.0 > self.refine_above {
            return Err(Error::config(
                "thresholds.coarsen_below, thresholds.refine_above",
                format!(
                    "coarsen_below ({}) times 8 exceeds refine_above ({}); merged octets would refine again",
                    self.coarsen_below, self.refine_above
                ),
            ));
        }
        Ok(())
    }

    /// `refine_above = factor · average rank load`, `coarsen_below` a
    /// sixteenth of that.
    pub fn from_average(total: u64, p: u32, factor: f64) -> Self {
        let refine_above = factor * total as f64 / p.max(1) as f64;
        RefinementThresholds {
            refine_above,
            coarsen_below: refine_above / 16.0,
        }
    }
}

/// The redistribution algorithm of the last pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BalancerKind {
    SfcMorton,
    SfcHilbert,
    Diffusive { iterations: u32, flow_iterations: u32 },
    GreedyGlobal,
}

impl BalancerKind {
    pub fn diffusive(iterations: u32) -> Self {
        BalancerKind::Diffusive {
            iterations,
            flow_iterations: DEFAULT_FLOW_ITERATIONS,
        }
    }

    pub fn is_sfc(&self) -> bool {
        matches!(self, BalancerKind::SfcMorton | BalancerKind::SfcHilbert)
    }

    /// Whether every rank needs every leaf weight.
    pub fn is_global(&self) -> bool {
        !matches!(self, BalancerKind::Diffusive { .. })
    }
}

impl fmt::Display for BalancerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalancerKind::SfcMorton => write!(f, "sfc_morton"),
            BalancerKind::SfcHilbert => write!(f, "sfc_hilbert"),
            BalancerKind::Diffusive {
                iterations,
                flow_iterations,
            } if *flow_iterations == DEFAULT_FLOW_ITERATIONS => write!(f, "diffusive({iterations})"),
            BalancerKind::Diffusive {
                iterations,
                flow_iterations,
            } => write!(f, "diffusive({iterations},{flow_iterations})"),
            BalancerKind::GreedyGlobal => write!(f, "greedy_global"),
        }
    }
}

impl FromStr for BalancerKind {
    type Err = Error;

    /// Accepts `sfc_morton`/`morton`, `sfc_hilbert`/`hilbert`,
    /// `greedy_global`/`greedy`, and `diffusive`, `diffusive(10)` or
    /// `diffusive(10,15)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::config("balancer", format!("unknown balancer `{s}`"));
        match t.as_str() {
            "sfc_morton" | "morton" => return Ok(BalancerKind::SfcMorton),
            "sfc_hilbert" | "hilbert" => return Ok(BalancerKind::SfcHilbert),
            "greedy_global" | "greedy" => return Ok(BalancerKind::GreedyGlobal),
            "diffusive" => return Ok(BalancerKind::diffusive(DEFAULT_DIFFUSIVE_ITERATIONS)),
            _ => {}
        }
        let args = t.strip_prefix("diffusive(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let nums: Vec<u32> = args
            .split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match nums[..] {
            [i] if i > 0 => Ok(BalancerKind::diffusive(i)),
            [i, f] if i > 0 && f > 0 => Ok(BalancerKind::Diffusive {
                iterations: i,
                flow_iterations: f,
            }),
            _ => Err(bad()),
        }
    }
}

/// Side effects of one balancer run, per rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BalanceTrace {
    /// Comparisons and moves performed by each rank.
    pub work: Vec<u64>,
    /// Weight records each rank holds while balancing.
    pub weight_records: Vec<u64>,
    /// Records each rank receives from collectives.
    pub allgather_records: Vec<u64>,
    /// Point-to-point messages `(sender, receiver) → count`.
    pub messages: BTreeMap<(u32, u32), u64>,
}

impl BalanceTrace {
    pub(crate) fn new(p: u32) -> Self {
        BalanceTrace {
            work: vec![0; p as usize],
            weight_records: vec![0; p as usize],
            allgather_records: vec![0; p as usize],
            messages: BTreeMap::new(),
        }
    }

    /// Every rank receives one record from each other rank and then holds
    /// all `leaves` weights.
    pub(crate) fn allgather(&mut self, leaves: u64) {
        let p = self.work.len() as u64;
        for r in 0..self.work.len() {
            self.allgather_records[r] += p - 1;
            self.weight_records[r] = self.weight_records[r].max(leaves);
        }
    }

    pub(crate) fn message(&mut self, from: u32, to: u32) {
        *self.messages.entry((from, to)).or_insert(0) += 1;
    }
}
