use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::{BalanceTrace, RankAssignment, WeightMap};
use crate::error::{Error, Result};
use crate::forest::BlockId;

/// Longest-processing-time list scheduling: heaviest leaf first, each onto
/// the currently least loaded rank (lowest index on ties).
pub fn balance_greedy_global(w: &WeightMap, p: u32) -> Result<RankAssignment> {
    balance_greedy_global_traced(w, p).map(|(a, _)| a)
}

pub fn balance_greedy_global_traced(w: &WeightMap, p: u32) -> Result<(RankAssignment, BalanceTrace)> {
    if p == 0 {
        return Err(Error::Domain("number of ranks must be positive".into()));
    }
    let mut leaves: Vec<(BlockId, u64)> = w.comp.iter().map(|(&id, &c)| (id, c)).collect();
    leaves.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = (0..p).map(|r| Reverse((0, r))).collect();
    let mut owner = BTreeMap::new();
    for (id, c) in &leaves {
        let Reverse((load, r)) = heap.pop().expect("p > 0");
        owner.insert(*id, r);
        heap.push(Reverse((load + c, r)));
    }
    let n = leaves.len() as u64;
    let log = |v: u64| 64 - v.max(1).leading_zeros() as u64;
    let work = n * log(n) + n * log(p as u64);
    let mut trace = BalanceTrace::new(p);
    trace.allgather(n);
    trace.work.iter_mut().for_each(|v| *v = work);
    Ok((RankAssignment::new(p, owner)?, trace))
}
