use std::collections::{BTreeMap, BTreeSet};

use super::{rank_graph_from, BalanceTrace, RankAssignment, WeightMap};
use crate::error::{Error, Result};
use crate::forest::{BlockId, Forest, LeafGraph};

/// Jacobi diffusion sweeps used to estimate the flow on each rank edge.
pub const DEFAULT_FLOW_ITERATIONS: u32 = 15;

/// Neighbor-local diffusive rebalancing on the rank graph induced by the
/// forest's leaf adjacency.
pub fn balance_diffusive(
    forest: &Forest,
    a: &RankAssignment,
    w: &WeightMap,
    iterations: u32,
    flow_iterations: u32,
) -> Result<RankAssignment> {
    let g = forest.leaf_graph();
    balance_diffusive_traced(&g, a, w, iterations, flow_iterations, None).map(|(a, _)| a)
}

/// Each iteration diffuses the current rank loads for `flow_iterations`
/// sweeps with `α = 1/(1 + max degree)`, accumulating the flow `F_ij` across
/// every rank edge. Rank `i` then hands leaves to each `j` with `F_ij > 0`:
/// leaves touching `j`'s territory first, then heavier first, each leaf
/// taken when it leaves the remaining flow closer to zero. All decisions
/// read the assignment at the start of the iteration.
///
/// `known` adds rank edges that persist regardless of leaf ownership, such
/// as the neighborhood from before a refinement that left some ranks
/// without leaves. Without it an empty rank is unreachable.
pub fn balance_diffusive_traced(
    g: &LeafGraph,
    a: &RankAssignment,
    w: &WeightMap,
    iterations: u32,
    flow_iterations: u32,
    known: Option<&[BTreeSet<u32>]>,
) -> Result<(RankAssignment, BalanceTrace)> {
    if iterations == 0 || flow_iterations == 0 {
        return Err(Error::Domain("diffusive iteration counts must be positive".into()));
    }
    if g.len() != a.owner.len() || g.leaves.iter().any(|id| !a.owner.contains_key(id)) {
        return Err(Error::Consistency("leaf graph and assignment cover different leaves".into()));
    }
    let p = a.p as usize;
    let weights: Vec<u64> = g.leaves.iter().map(|id| w.weight(id)).collect();
    let mut owners: Vec<u32> = g.leaves.iter().map(|id| a.owner[id]).collect();
    let mut trace = BalanceTrace::new(a.p);

    for _ in 0..iterations {
        let snapshot = RankAssignment {
            p: a.p,
            owner: g.leaves.iter().copied().zip(owners.iter().copied()).collect(),
        };
        let mut graph = rank_graph_from(g, &snapshot);
        if let Some(known) = known {
            for (r, nbrs) in known.iter().enumerate().take(p) {
                for &j in nbrs {
                    if (j as usize) < p && j as usize != r {
                        graph[r].insert(j);
                        graph[j as usize].insert(r as u32);
                    }
                }
            }
        }
        let adj: Vec<Vec<u32>> = graph.into_iter().map(|s| s.into_iter().collect()).collect();
        let max_deg = adj.iter().map(Vec::len).max().unwrap_or(0);
        let alpha = 1.0 / (1.0 + max_deg as f64);

        let mut owned: Vec<Vec<usize>> = vec![Vec::new(); p];
        let mut loads = vec![0u64; p];
        for (i, &r) in owners.iter().enumerate() {
            owned[r as usize].push(i);
            loads[r as usize] += weights[i];
        }

        let flows = accumulated_flows(&adj, &loads, alpha, flow_iterations);

        let mut moves: Vec<(usize, u32, u32)> = Vec::new();
        for r in 0..p {
            let deg = adj[r].len() as u64;
            trace.work[r] += flow_iterations as u64 * deg;
            trace.weight_records[r] = trace.weight_records[r].max(owned[r].len() as u64 + deg);
            for &j in &adj[r] {
                for _ in 0..flow_iterations {
                    trace.message(r as u32, j);
                }
            }
            // remaining flow per neighbor and the rank's total outflow
            let mut remaining: Vec<f64> = flows[r].iter().map(|&f| f.max(0.0)).collect();
            let mut budget: f64 = remaining.iter().sum();
            if budget <= 0.0 {
                continue;
            }
            let mut received = vec![0u64; adj[r].len()];
            let mut own_load = loads[r];
            let mut candidates: Vec<(usize, Vec<usize>)> = owned[r]
                .iter()
                .filter(|&&i| weights[i] > 0)
                .map(|&i| {
                    let touched = (0..adj[r].len())
                        .filter(|&k| g.adj[i].iter().any(|&(n, _)| owners[n] == adj[r][k]))
                        .collect();
                    (i, touched)
                })
                .collect();
            candidates.sort_by(|x, y| weights[y.0].cmp(&weights[x.0]).then(g.leaves[x.0].cmp(&g.leaves[y.0])));
            loop {
                let mut best: Option<(bool, u64, f64, usize, usize)> = None;
                for (c, (i, touched)) in candidates.iter().enumerate() {
                    let wi = weights[*i];
                    trace.work[r] += 1;
                    if (wi as f64) >= 2.0 * budget {
                        continue;
                    }
                    for k in 0..adj[r].len() {
                        let j = adj[r][k] as usize;
                        if remaining[k] <= 0.0 || loads[j] + received[k] + wi > own_load {
                            continue;
                        }
                        let key = (touched.contains(&k), wi, remaining[k], k, c);
                        let better = match best {
                            None => true,
                            Some(b) => (key.0, key.1, key.2) > (b.0, b.1, b.2),
                        };
                        if better {
                            best = Some(key);
                        }
                    }
                }
                let Some((_, wi, _, k, c)) = best else { break };
                let (i, _) = candidates.remove(c);
                let j = adj[r][k];
                remaining[k] -= wi as f64;
                received[k] += wi;
                budget -= wi as f64;
                own_load -= wi;
                moves.push((i, j, r as u32));
                trace.message(r as u32, j);
            }
        }
        // receivers accept offers while they stay at or below the sender's load
        let mut offers: Vec<Vec<(u32, usize)>> = vec![Vec::new(); p];
        for (i, j, from) in moves {
            offers[j as usize].push((from, i));
        }
        for (j, list) in offers.iter_mut().enumerate() {
            list.sort_by(|a, b| {
                loads[b.0 as usize]
                    .cmp(&loads[a.0 as usize])
                    .then(weights[b.1].cmp(&weights[a.1]))
                    .then(g.leaves[a.1].cmp(&g.leaves[b.1]))
            });
            let mut accepted = 0u64;
            for &(from, i) in list.iter() {
                trace.work[j] += 1;
                if loads[j] + accepted + weights[i] <= loads[from as usize] {
                    accepted += weights[i];
                    owners[i] = j as u32;
                    trace.message(j as u32, from);
                }
            }
        }
    }

    let owner: BTreeMap<BlockId, u32> = g.leaves.iter().copied().zip(owners).collect();
    Ok((RankAssignment::new(a.p, owner)?, trace))
}

/// Net flow `F[i][k]` from rank `i` to its `k`-th neighbor over `sweeps`
/// Jacobi diffusion steps started from `loads`.
fn accumulated_flows(adj: &[Vec<u32>], loads: &[u64], alpha: f64, sweeps: u32) -> Vec<Vec<f64>> {
    let mut x: Vec<f64> = loads.iter().map(|&l| l as f64).collect();
    let mut flows: Vec<Vec<f64>> = adj.iter().map(|n| vec![0.0; n.len()]).collect();
    for _ in 0..sweeps {
        let mut next = x.clone();
        for (i, nbrs) in adj.iter().enumerate() {
            for (k, &j) in nbrs.iter().enumerate() {
                let d = alpha * (x[i] - x[j as usize]);
                flows[i][k] += d;
                next[i] -= d;
            }
        }
        x = next;
    }
    flows
}
