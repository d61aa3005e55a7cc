use std::collections::{BTreeMap, HashMap};

use super::ParticleSet;
use crate::forest::{BlockId, Forest};

/// Relative slack on the touching distance `2·radius`.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

type CellKey = [i64; 3];

// Half of the 26-neighborhood plus the cell itself; each unordered cell pair
// is visited exactly once.
const HALF_STENCIL: [[i64; 3]; 13] = [
    [1, 0, 0],
    [-1, 1, 0],
    [0, 1, 0],
    [1, 1, 0],
    [-1, -1, 1],
    [0, -1, 1],
    [1, -1, 1],
    [-1, 0, 1],
    [0, 0, 1],
    [1, 0, 1],
    [-1, 1, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Calls `f(i, j)` with `i < j` once for every pair whose center distance is
/// at most `2·radius·(1 + CONTACT_TOLERANCE)`.
pub fn for_each_contact<F: FnMut(usize, usize)>(p: &ParticleSet, mut f: F) {
    if p.len() < 2 {
        return;
    }
    let reach = 2.0 * p.radius * (1.0 + CONTACT_TOLERANCE);
    let reach2 = reach * reach;
    let key = |q: &[f64; 3]| -> CellKey { q.map(|c| (c / reach).floor() as i64) };

    let mut order: Vec<usize> = (0..p.len()).collect();
    let keys: Vec<CellKey> = p.positions.iter().map(key).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    let mut cells: HashMap<CellKey, (usize, usize)> = HashMap::new();
    let mut start = 0;
    while start < order.len() {
        let k = keys[order[start]];
        let mut end = start + 1;
        while end < order.len() && keys[order[end]] == k {
            end += 1;
        }
        cells.insert(k, (start, end));
        start = end;
    }

    let touching = |a: usize, b: usize| {
        let (x, y) = (p.positions[a], p.positions[b]);
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
        d2 <= reach2
    };
    let mut emit = |a: usize, b: usize| {
        if touching(a, b) {
            f(a.min(b), a.max(b));
        }
    };

    let mut sorted_cells: Vec<(&CellKey, &(usize, usize))> = cells.iter().collect();
    sorted_cells.sort();
    for (k, &(s, e)) in sorted_cells {
        let here = &order[s..e];
        for (n, &a) in here.iter().enumerate() {
            for &b in &here[n + 1..] {
                emit(a, b);
            }
        }
        for off in HALF_STENCIL {
            let nk = [k[0] + off[0], k[1] + off[1], k[2] + off[2]];
            if let Some(&(ns, ne)) = cells.get(&nk) {
                for &a in here {
                    for &b in &order[ns..ne] {
                        emit(a, b);
                    }
                }
            }
        }
    }
}

/// Contacts per leaf, each charged to the leaf holding the pair's midpoint.
/// Every leaf has an entry.
pub fn count_contacts(p: &ParticleSet, forest: &Forest) -> BTreeMap<BlockId, u64> {
    let mut counts: BTreeMap<BlockId, u64> = forest.leaves().iter().map(|&id| (id, 0)).collect();
    for_each_contact(p, |i, j| {
        let (a, b) = (p.positions[i], p.positions[j]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        if let Some(id) = forest.locate(mid) {
            *counts.get_mut(&id).expect("locate returns a leaf") += 1;
        }
    });
    counts
}

/// Number of contacts incident to each particle.
pub fn contact_degrees(p: &ParticleSet) -> Vec<u32> {
    let mut deg = vec![0u32; p.len()];
    for_each_contact(p, |i, j| {
        deg[i] += 1;
        deg[j] += 1;
    });
    deg
}

/// Particles per leaf by center; faces between leaves go to the lower side.
/// Particles outside the domain are not counted. Every leaf has an entry.
pub fn particles_per_leaf(p: &ParticleSet, forest: &Forest) -> BTreeMap<BlockId, u64> {
    let mut counts: BTreeMap<BlockId, u64> = forest.leaves().iter().map(|&id| (id, 0)).collect();
    for q in &p.positions {
        if let Some(id) = forest.locate(*q) {
            *counts.get_mut(&id).expect("locate returns a leaf") += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::Aabb;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_pairs(p: &ParticleSet) -> Vec<(usize, usize)> {
        let reach = 2.0 * p.radius * (1.0 + CONTACT_TOLERANCE);
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let (a, b) = (p.positions[i], p.positions[j]);
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                if d <= reach {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn cell_pairs(p: &ParticleSet) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for_each_contact(p, |i, j| out.push((i, j)));
        out.sort();
        out
    }

    fn random_set(n: usize, seed: u64, side: f64) -> ParticleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = (0..n).map(|_| [rng.gen_range(0.0..side), rng.gen_range(0.0..side), rng.gen_range(0.0..side)]).collect();
        ParticleSet::new(pos, 0.5).unwrap()
    }

    #[test]
    fn separated_pair_has_no_contact() {
        let p = ParticleSet::new(vec![[0.0; 3], [1.0 + 1e-6, 0.0, 0.0]], 0.5).unwrap();
        assert!(cell_pairs(&p).is_empty());
        let q = ParticleSet::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], 0.5).unwrap();
        assert_eq!(cell_pairs(&q), vec![(0, 1)]);
    }

    #[test]
    fn pairs_across_negative_cells_found() {
        let p = ParticleSet::new(vec![[-0.2, -0.3, 0.1], [0.5, 0.2, -0.4], [-3.0, 0.0, 0.0]], 0.5).unwrap();
        assert_eq!(cell_pairs(&p), all_pairs(&p));
    }

    #[test]
    fn midpoint_charging() {
        let forest = Forest::create([2, 1, 1], Aabb::new([0.0; 3], [4.0, 2.0, 2.0]).unwrap(), 0).unwrap();
        // midpoint 2.0 sits on the shared face and goes to the lower leaf
        let p = ParticleSet::new(vec![[1.5, 1.0, 1.0], [2.5, 1.0, 1.0], [3.0, 1.0, 1.0], [3.0, 1.0, 2.0]], 0.5).unwrap();
        let c = count_contacts(&p, &forest);
        let lo = BlockId::root([0, 0, 0]);
        let hi = BlockId::root([1, 0, 0]);
        assert_eq!(c[&lo], 1);
        assert_eq!(c[&hi], 2);
        assert_eq!(c.values().sum::<u64>(), all_pairs(&p).len() as u64);
    }

    #[test]
    fn particle_counts_match_box_oracle() {
        let domain = Aabb::new([0.0; 3], [3.0, 3.0, 3.0]).unwrap();
        let mut forest = Forest::create([1, 1, 1], domain, 1).unwrap();
        forest.refine_block(&BlockId::new([0, 0, 0], &[0]).unwrap()).unwrap();
        let p = random_set(400, 7, 3.0);
        let counts = particles_per_leaf(&p, &forest);
        assert_eq!(counts.values().sum::<u64>(), 400);
        for (id, &n) in &counts {
            let b = forest.block_aabb(id).unwrap();
            let inside = p
                .positions
                .iter()
                .filter(|q| (0..3).all(|k| q[k] > b.min[k] && q[k] <= b.max[k]))
                .count();
            assert_eq!(n as usize, inside, "{id}");
        }
    }

    #[test]
    fn empty_region_counts_zero() {
        let domain = Aabb::new([0.0; 3], [2.0, 2.0, 2.0]).unwrap();
        let forest = Forest::create([2, 2, 2], domain, 0).unwrap();
        let p = ParticleSet::new(vec![[0.5, 0.5, 0.5]], 0.5).unwrap();
        let counts = particles_per_leaf(&p, &forest);
        assert_eq!(counts.len(), 8);
        assert_eq!(counts.values().filter(|&&n| n == 0).count(), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn cell_list_equals_all_pairs(n in 0usize..500, seed in any::<u64>(), side in 2.0f64..12.0) {
            let p = random_set(n, seed, side);
            prop_assert_eq!(cell_pairs(&p), all_pairs(&p));
        }
    }
}
