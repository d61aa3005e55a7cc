use std::collections::{BTreeMap, BTreeSet};

use super::{RankAssignment, RefinementThresholds, WeightMap};
use crate::error::Result;
use crate::forest::{BlockId, Forest, LeafGraph};
use crate::scenario::{count_contacts, particles_per_leaf, ParticleSet};

/// Where computational weights come from. `scale` multiplies every count so
/// a small lattice can stand in for a larger per-leaf workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    Particles { scale: u64 },
    Contacts { scale: u64 },
}

impl WeightSource {
    pub fn particles() -> Self {
        WeightSource::Particles { scale: 1 }
    }

    pub fn contacts() -> Self {
        WeightSource::Contacts { scale: 1 }
    }

    pub fn scale(&self) -> u64 {
        match *self {
            WeightSource::Particles { scale } | WeightSource::Contacts { scale } => scale,
        }
    }
}

/// Computational weights from `source` and interface areas for every pair
/// of face-sharing leaves.
pub fn assign_weights(forest: &Forest, source: WeightSource, particles: &ParticleSet) -> WeightMap {
    assign_weights_on(forest, &forest.leaf_graph(), source, particles)
}

/// `assign_weights` reusing an already built leaf graph of `forest`.
pub(crate) fn assign_weights_on(forest: &Forest, g: &LeafGraph, source: WeightSource, particles: &ParticleSet) -> WeightMap {
    let mut comp = match source {
        WeightSource::Particles { .. } => particles_per_leaf(particles, forest),
        WeightSource::Contacts { .. } => count_contacts(particles, forest),
    };
    let scale = source.scale();
    if scale != 1 {
        comp.values_mut().for_each(|v| *v *= scale);
    }
    WeightMap {
        comp,
        comm: interface_areas(g),
    }
}

pub(crate) fn interface_areas(g: &LeafGraph) -> BTreeMap<(BlockId, BlockId), f64> {
    let mut comm = BTreeMap::new();
    for (i, nbrs) in g.adj.iter().enumerate() {
        for &(j, area) in nbrs {
            if i < j && area > 0.0 {
                comm.insert((g.leaves[i], g.leaves[j]), area);
            }
        }
    }
    comm
}

/// Leaves to split and parents whose eight children should merge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefinementPlan {
    pub refine: BTreeSet<BlockId>,
    pub coarsen: BTreeSet<BlockId>,
}

impl RefinementPlan {
    pub fn is_empty(&self) -> bool {
        self.refine.is_empty() && self.coarsen.is_empty()
    }
}

pub fn decide_refinement(forest: &Forest, w: &WeightMap, t: &RefinementThresholds) -> RefinementPlan {
    let mut plan = RefinementPlan::default();
    for id in forest.leaves() {
        if (w.weight(id) as f64) > t.refine_above && id.level() < forest.max_level() {
            plan.refine.insert(*id);
        }
    }
    let parents: BTreeSet<BlockId> = forest.leaves().iter().filter_map(|id| id.parent()).collect();
    for parent in parents {
        let kids = parent.children();
        if kids.iter().all(|c| forest.is_leaf(c) && (w.weight(c) as f64) < t.coarsen_below) {
            plan.coarsen.insert(parent);
        }
    }
    plan
}

/// Coarsen, then refine, then restore 2:1 balance.
pub fn apply_refinement(forest: &Forest, plan: &RefinementPlan) -> Result<Forest> {
    let mut f = forest.clone();
    for parent in &plan.coarsen {
        f.coarsen_siblings(parent)?;
    }
    for id in &plan.refine {
        f.refine_block(id)?;
    }
    f.enforce_two_to_one()?;
    Ok(f)
}

/// Owners for the leaves of `forest` after refinement: a child keeps its
/// ancestor's rank, a merged parent takes the rank of its first descendant.
pub fn inherit_assignment(old: &RankAssignment, forest: &Forest) -> Result<RankAssignment> {
    let mut owner = BTreeMap::new();
    for &id in forest.leaves() {
        let r = if let Some(&r) = old.owner.get(&id) {
            r
        } else if let Some((_, &r)) = old.owner.range(..id).next_back().filter(|(a, _)| a.is_ancestor_of(&id)) {
            r
        } else if let Some((_, &r)) = old.owner.range(id..).next().filter(|(d, _)| id.is_ancestor_of(d)) {
            r
        } else {
            return Err(crate::Error::Consistency(format!("leaf {id} has no counterpart in the old assignment")));
        };
        owner.insert(id, r);
    }
    RankAssignment::new(old.p, owner)
}
