use std::collections::BTreeMap;

use super::*;
use crate::balance::{balance_diffusive_traced, balance_sfc_traced, DEFAULT_FLOW_ITERATIONS};
use crate::forest::Aabb;
use crate::sfc::{order_leaves, CurveKind};

fn uniform(dims: [u32; 3], level: u8, w: u64) -> (Forest, WeightMap) {
    let f = Forest::create(dims, Aabb::unit(), level).unwrap();
    let comp = f.leaves().iter().map(|&id| (id, w)).collect();
    (f, WeightMap { comp, comm: BTreeMap::new() })
}

fn cluster(dims: [u32; 3], level: u8, w: u64, p: u32) -> Cluster {
    let (f, weights) = uniform(dims, level, w);
    let a = RankAssignment::curve_chunks(&f, CurveKind::Hilbert, p).unwrap();
    init_cluster(f, a, weights, p).unwrap()
}

#[test]
fn trivial_cluster() {
    let mut c = cluster([1, 1, 1], 0, 5, 1);
    let m = CostModel::default();
    assert_eq!(simulate_timestep(&mut c, &m), m.c_comp * 5.0);
    assert_eq!(c.counters.messages, vec![0]);
}

#[test]
fn init_rejects_mismatch() {
    let (f, w) = uniform([2, 1, 1], 0, 1);
    let (g, _) = uniform([1, 1, 1], 0, 1);
    let a = RankAssignment::single(&g, 1).unwrap();
    assert!(matches!(init_cluster(f.clone(), a, w.clone(), 1), Err(Error::Consistency(_))));
    let a = RankAssignment::single(&f, 2).unwrap();
    assert!(init_cluster(f, a, w, 3).is_err());
}

#[test]
fn one_to_one_mapping_of_fig_two() {
    let (f, w) = uniform([4, 4, 1], 1, 1);
    let a = RankAssignment::round_robin(&f, 128).unwrap();
    let c = init_cluster(f, a, w, 128).unwrap();
    assert!(c.assignment.leaves_per_rank().iter().all(|&n| n == 1));
}

#[test]
fn compute_only_time_is_l_max() {
    let (f, mut w) = uniform([2, 2, 2], 1, 3);
    let heavy = *f.leaves().iter().next().unwrap();
    w.comp.insert(heavy, 40);
    let a = RankAssignment::curve_chunks(&f, CurveKind::Morton, 8).unwrap();
    let mut c = init_cluster(f, a, w, 8).unwrap();
    let m = CostModel::compute_only();
    let l_max = *c.loads().iter().max().unwrap();
    assert_eq!(simulate_timestep(&mut c, &m), m.c_comp * l_max as f64);
}

#[test]
fn symmetric_split_has_equal_rank_times() {
    let c = cluster([2, 1, 1], 1, 4, 2);
    let t = c.rank_step_times(&CostModel::default());
    assert_eq!(t[0], t[1]);
    // four 0.5×0.5 leaf faces on the x = 0.5 plane
    assert!((c.cut_areas()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn step_counts_one_message_per_neighbor_rank() {
    let mut c = cluster([2, 2, 2], 0, 1, 8);
    windowed_step_time(&mut c, &CostModel::default(), 100);
    assert_eq!(c.counters.messages, vec![700; 8]);
}

#[test]
fn migrate_reports_owner_diff() {
    let mut c = cluster([4, 1, 1], 0, 1, 2);
    let m = CostModel::default();
    let same = c.assignment.clone();
    assert_eq!(migrate(&mut c, same, &m).unwrap().blocks_moved, 0);

    let ids: Vec<BlockId> = c.forest.leaves().iter().copied().collect();
    let mut swapped = c.assignment.clone();
    let (a, b) = (ids[0], ids[3]);
    let (ra, rb) = (swapped.owner[&a], swapped.owner[&b]);
    assert_ne!(ra, rb);
    swapped.owner.insert(a, rb);
    swapped.owner.insert(b, ra);
    let r = migrate(&mut c, swapped.clone(), &m).unwrap();
    assert_eq!(r.blocks_moved, 2);
    assert_eq!(r.pairs.len(), 2);
    assert_eq!(r.bytes_moved, 2 * m.bytes_per_block_record);
    let expect = 2.0 * m.c_latency + r.bytes_moved as f64 / m.bandwidth;
    assert!((r.time - expect).abs() < 1e-18);
    assert_eq!(c.assignment, swapped);
    assert_eq!(c.assignment.owner.len(), 4);

    let (g, _) = uniform([1, 1, 1], 0, 1);
    assert!(migrate(&mut c, RankAssignment::single(&g, 2).unwrap(), &m).is_err());
}

#[test]
fn payload_adds_particle_bytes() {
    let mut c = cluster([2, 1, 1], 0, 1, 2);
    let m = CostModel::default();
    let ids: Vec<BlockId> = c.forest.leaves().iter().copied().collect();
    c.payload = Some(ids.iter().map(|&id| (id, 10)).collect());
    let mut next = c.assignment.clone();
    next.owner.insert(ids[0], 1 - next.owner[&ids[0]]);
    let r = migrate(&mut c, next, &m).unwrap();
    assert_eq!(r.bytes_moved, m.bytes_per_block_record + 10 * m.bytes_per_particle);
}

#[test]
fn memory_models() {
    let m = CostModel::default();
    let mut one = cluster([2, 2, 2], 0, 1, 1);
    assert_eq!(
        account_balancer_memory(&mut one, BalancerKind::SfcHilbert, &m),
        account_balancer_memory(&mut one, BalancerKind::diffusive(10), &m)
    );
    let mut small = cluster([2, 2, 2], 1, 1, 8);
    let mut large = cluster([4, 4, 4], 1, 1, 64);
    let s = account_balancer_memory(&mut small, BalancerKind::SfcMorton, &m)[0];
    let l = account_balancer_memory(&mut large, BalancerKind::SfcMorton, &m)[0];
    assert_eq!(l, 8 * s);
    let ds = account_balancer_memory(&mut small, BalancerKind::diffusive(10), &m);
    // 8 own leaves plus 7 neighbor summaries
    assert_eq!(ds, vec![15 * m.bytes_per_weight_record; 8]);
    let dl = account_balancer_memory(&mut large, BalancerKind::diffusive(10), &m);
    assert_eq!(*dl.iter().max().unwrap(), (8 + 26) * m.bytes_per_weight_record);
    assert_eq!(large.counters.peak_memory, dl.iter().map(|&d| d.max(l)).collect::<Vec<_>>());
}

#[test]
fn traces_feed_counters() {
    let m = CostModel::default();
    let mut c = cluster([2, 2, 2], 1, 1, 8);
    let order = order_leaves(&c.forest, CurveKind::Hilbert);
    let (_, t) = balance_sfc_traced(&order, &c.weights, 8).unwrap();
    let work = account_balancer_runtime(&mut c, &t, &m);
    assert_eq!(work, vec![64 + 8; 8]);
    assert_eq!(c.counters.messages, vec![7; 8]);

    let mut d = cluster([2, 2, 2], 1, 1, 8);
    d.weights.comp.values_mut().take(8).for_each(|v| *v = 9);
    let graph = d.rank_graph();
    let (_, t) = balance_diffusive_traced(d.graph(), &d.assignment, &d.weights, 1, DEFAULT_FLOW_ITERATIONS, None).unwrap();
    account_balancer_runtime(&mut d, &t, &m);
    assert!(d.counters.balancer_work.iter().all(|&w| w > 0));
    for &(i, j) in t.messages.keys() {
        assert!(graph[i as usize].contains(&j));
    }
}

#[test]
fn cost_model_validation() {
    CostModel::default().validate().unwrap();
    let bad = CostModel { c_comm: -1.0, ..CostModel::default() };
    assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "cost_model.c_comm"));
    let bad = CostModel { bandwidth: 0.0, ..CostModel::default() };
    assert!(bad.validate().is_err());
}
