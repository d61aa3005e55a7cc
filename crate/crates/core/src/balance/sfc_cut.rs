use std::collections::BTreeMap;

use super::{BalanceTrace, RankAssignment, WeightMap};
use crate::error::{Error, Result};
use crate::forest::BlockId;

/// Rank of every position of a weight sequence under the greedy prefix cut
/// targeting `total·(r+1)/p` for rank `r`.
///
/// A leaf that straddles a target joins the current rank only if that leaves
/// the running sum strictly closer to the target. Every rank then carries
/// less than `total/p + max weight` when the total is positive.
pub fn cut_loads(weights: &[u64], p: u32) -> Result<Vec<u32>> {
    if p == 0 {
        return Err(Error::Domain("number of ranks must be positive".into()));
    }
    let total: u128 = weights.iter().map(|&w| w as u128).sum();
    let pp = p as u128;
    let mut ranks = Vec::with_capacity(weights.len());
    let mut r = 0u32;
    let mut running: u128 = 0;
    let mut i = 0;
    while i < weights.len() {
        if r + 1 == p {
            ranks.resize(weights.len(), r);
            break;
        }
        let w = weights[i] as u128;
        let target = total * (r as u128 + 1);
        let next = (running + w) * pp;
        if next <= target {
            ranks.push(r);
            running += w;
            i += 1;
            continue;
        }
        let over = next - target;
        let under = target.saturating_sub(running * pp);
        if over < under {
            ranks.push(r);
            running += w;
            i += 1;
        }
        r += 1;
    }
    Ok(ranks)
}

/// Contiguous segments of `order` assigned to ranks `0..p` in order.
pub fn balance_sfc(order: &[BlockId], w: &WeightMap, p: u32) -> Result<RankAssignment> {
    balance_sfc_traced(order, w, p).map(|(a, _)| a)
}

pub fn balance_sfc_traced(order: &[BlockId], w: &WeightMap, p: u32) -> Result<(RankAssignment, BalanceTrace)> {
    let ranks = cut_loads(&w.ordered(order), p)?;
    let owner: BTreeMap<BlockId, u32> = order.iter().copied().zip(ranks).collect();
    if owner.len() != order.len() {
        return Err(Error::Consistency("curve order lists a leaf twice".into()));
    }
    let mut trace = BalanceTrace::new(p);
    let n = order.len() as u64;
    trace.allgather(n);
    // every rank replays the full prefix walk
    trace.work.iter_mut().for_each(|v| *v = n + p as u64);
    Ok((RankAssignment::new(p, owner)?, trace))
}
