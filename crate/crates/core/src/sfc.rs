//! Morton and Hilbert orderings of octree cells and forest leaves.

use crate::error::{Error, Result};
use crate::forest::{BlockId, Forest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    Morton,
    Hilbert,
}

/// Lattice cell at a given level inside one root brick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellCoord {
    pub x: u32,
    pub y: u32,
    pub z: u32,
    pub level: u8,
}

impl CellCoord {
    pub fn new(x: u32, y: u32, z: u32, level: u8) -> Self {
        CellCoord { x, y, z, level }
    }

    fn validate(&self) -> Result<()> {
        if self.level > crate::forest::LEVEL_LIMIT {
            return Err(Error::Domain(format!(
                "level {} exceeds the level limit",
                self.level
            )));
        }
        let side = 1u64 << self.level;
        if [self.x, self.y, self.z].iter().any(|&c| c as u64 >= side) {
            return Err(Error::Domain(format!(
                "cell ({}, {}, {}) outside level {} cube",
                self.x, self.y, self.z, self.level
            )));
        }
        Ok(())
    }
}

fn spread3(v: u32) -> u64 {
    let mut x = (v as u64) & 0x1f_ffff;
    x = (x | (x << 32)) & 0x1f00_0000_00ff_ff;
    x = (x | (x << 16)) & 0x1f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

/// Bit interleave: bit `3t` from x, `3t+1` from y, `3t+2` from z.
pub(crate) fn interleave3(c: [u32; 3]) -> u64 {
    spread3(c[0]) | (spread3(c[1]) << 1) | (spread3(c[2]) << 2)
}

pub fn morton_index(c: CellCoord) -> Result<u128> {
    c.validate()?;
    Ok(interleave3([c.x, c.y, c.z]) as u128)
}

// Orientation state machine of the 3D Hilbert curve. `HILBERT_DIGIT[s][o]` is
// the position along the curve of octant `o` (x | y<<1 | z<<2) when the parent
// cell is in state `s`; `HILBERT_NEXT[s][o]` is the child's state. State 0 is
// the canonical orientation entering at the origin.
const HILBERT_DIGIT: [[u8; 8]; 24] = [
    [0, 7, 3, 4, 1, 6, 2, 5],
    [0, 3, 1, 2, 7, 4, 6, 5],
    [4, 7, 5, 6, 3, 0, 2, 1],
    [6, 7, 5, 4, 1, 0, 2, 3],
    [0, 1, 3, 2, 7, 6, 4, 5],
    [0, 3, 7, 4, 1, 2, 6, 5],
    [4, 7, 3, 0, 5, 6, 2, 1],
    [0, 1, 7, 6, 3, 2, 4, 5],
    [6, 5, 1, 2, 7, 4, 0, 3],
    [0, 7, 1, 6, 3, 4, 2, 5],
    [4, 5, 3, 2, 7, 6, 0, 1],
    [4, 3, 5, 2, 7, 0, 6, 1],
    [6, 5, 7, 4, 1, 2, 0, 3],
    [4, 5, 7, 6, 3, 2, 0, 1],
    [4, 3, 7, 0, 5, 2, 6, 1],
    [6, 7, 1, 0, 5, 4, 2, 3],
    [6, 1, 5, 2, 7, 0, 4, 3],
    [2, 3, 5, 4, 1, 0, 6, 7],
    [2, 1, 5, 6, 3, 0, 4, 7],
    [2, 1, 3, 0, 5, 6, 4, 7],
    [2, 3, 1, 0, 5, 4, 6, 7],
    [6, 1, 7, 0, 5, 2, 4, 3],
    [2, 5, 3, 4, 1, 6, 0, 7],
    [2, 5, 1, 6, 3, 4, 0, 7],
];

const HILBERT_NEXT: [[u8; 8]; 24] = [
    [1, 2, 3, 4, 5, 6, 0, 0],
    [7, 8, 9, 1, 10, 5, 11, 1],
    [18, 15, 2, 9, 6, 17, 2, 11],
    [15, 9, 3, 16, 17, 11, 3, 0],
    [9, 7, 16, 4, 11, 10, 0, 4],
    [4, 12, 13, 1, 0, 5, 14, 5],
    [19, 3, 2, 20, 6, 0, 6, 14],
    [0, 4, 14, 13, 21, 7, 9, 7],
    [16, 8, 23, 8, 4, 12, 13, 1],
    [5, 6, 1, 2, 15, 7, 9, 9],
    [22, 10, 11, 10, 16, 4, 23, 13],
    [17, 10, 11, 11, 8, 18, 1, 2],
    [21, 12, 7, 8, 22, 12, 10, 5],
    [23, 13, 21, 7, 14, 13, 22, 10],
    [20, 13, 12, 19, 14, 14, 5, 6],
    [3, 0, 20, 14, 15, 21, 15, 9],
    [8, 18, 16, 16, 1, 2, 3, 4],
    [17, 22, 17, 11, 3, 16, 20, 23],
    [18, 16, 18, 23, 19, 3, 2, 20],
    [19, 21, 18, 15, 19, 22, 6, 17],
    [20, 23, 15, 21, 20, 14, 17, 22],
    [12, 19, 5, 6, 21, 21, 15, 7],
    [22, 22, 17, 10, 12, 19, 8, 18],
    [23, 23, 8, 18, 20, 13, 12, 19],
];

fn hilbert_unchecked(c: [u32; 3], level: u8) -> u64 {
    let mut state = 0usize;
    let mut h = 0u64;
    for l in (0..level as u32).rev() {
        let o = (((c[0] >> l) & 1) | (((c[1] >> l) & 1) << 1) | (((c[2] >> l) & 1) << 2)) as usize;
        h = (h << 3) | HILBERT_DIGIT[state][o] as u64;
        state = HILBERT_NEXT[state][o] as usize;
    }
    h
}

pub fn hilbert_index(c: CellCoord) -> Result<u128> {
    c.validate()?;
    Ok(hilbert_unchecked([c.x, c.y, c.z], c.level) as u128)
}

pub fn curve_index(kind: CurveKind, c: CellCoord) -> Result<u128> {
    match kind {
        CurveKind::Morton => morton_index(c),
        CurveKind::Hilbert => hilbert_index(c),
    }
}

/// Sort key of a leaf: brick rank (x fastest), then the curve index of the
/// start of the leaf's range at the forest's finest admissible level.
pub fn leaf_key(forest: &Forest, kind: CurveKind, id: &BlockId) -> u128 {
    let dims = forest.root_dims();
    let r = id.root_index();
    let brick = r[0] as u128 + dims[0] as u128 * (r[1] as u128 + dims[1] as u128 * r[2] as u128);
    let local = match kind {
        CurveKind::Morton => interleave3(id.coord()),
        CurveKind::Hilbert => hilbert_unchecked(id.coord(), id.level()),
    };
    let shift = 3 * (forest.max_level() - id.level()) as u32;
    (brick << 64) | ((local as u128) << shift)
}

/// Total order of all leaves along the chosen curve.
pub fn order_leaves(forest: &Forest, kind: CurveKind) -> Vec<BlockId> {
    let mut keyed: Vec<(u128, BlockId)> = forest
        .leaves()
        .iter()
        .map(|b| (leaf_key(forest, kind, b), *b))
        .collect();
    keyed.sort_unstable_by_key(|&(k, _)| k);
    keyed.into_iter().map(|(_, b)| b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::Aabb;
    use std::collections::HashSet;

    fn cells(level: u8) -> impl Iterator<Item = CellCoord> {
        let n = 1u32 << level;
        (0..n).flat_map(move |z| {
            (0..n).flat_map(move |y| (0..n).map(move |x| CellCoord::new(x, y, z, level)))
        })
    }

    /// Cells in curve order, checking the index map is a bijection.
    fn walk(kind: CurveKind, level: u8) -> Vec<CellCoord> {
        let n = 1usize << (3 * level);
        let mut slots = vec![None; n];
        for c in cells(level) {
            let i = curve_index(kind, c).unwrap() as usize;
            assert!(i < n);
            assert!(slots[i].is_none(), "index {i} hit twice");
            slots[i] = Some(c);
        }
        slots.into_iter().map(Option::unwrap).collect()
    }

    fn face_adjacent(a: &CellCoord, b: &CellCoord) -> bool {
        let d = (a.x as i64 - b.x as i64).abs()
            + (a.y as i64 - b.y as i64).abs()
            + (a.z as i64 - b.z as i64).abs();
        d == 1
    }

    fn mean_step(path: &[CellCoord]) -> f64 {
        let total: f64 = path
            .windows(2)
            .map(|w| {
                let dx = w[0].x as f64 - w[1].x as f64;
                let dy = w[0].y as f64 - w[1].y as f64;
                let dz = w[0].z as f64 - w[1].z as f64;
                (dx * dx + dy * dy + dz * dz).sqrt()
            })
            .sum();
        total / (path.len() - 1) as f64
    }

    #[test]
    fn morton_values() {
        assert_eq!(morton_index(CellCoord::new(0, 0, 0, 5)).unwrap(), 0);
        assert_eq!(morton_index(CellCoord::new(1, 1, 1, 1)).unwrap(), 7);
        assert_eq!(morton_index(CellCoord::new(1, 0, 0, 1)).unwrap(), 1);
        assert_eq!(morton_index(CellCoord::new(0, 0, 1, 1)).unwrap(), 4);
        assert!(morton_index(CellCoord::new(2, 0, 0, 1)).is_err());
    }

    #[test]
    fn morton_matches_naive_interleave() {
        for c in cells(2) {
            let mut naive = 0u128;
            for t in 0..2 {
                naive |= (((c.x >> t) & 1) as u128) << (3 * t);
                naive |= (((c.y >> t) & 1) as u128) << (3 * t + 1);
                naive |= (((c.z >> t) & 1) as u128) << (3 * t + 2);
            }
            assert_eq!(morton_index(c).unwrap(), naive);
        }
        let big = CellCoord::new((1 << 20) - 1, 0, (1 << 20) - 1, 20);
        assert_eq!(morton_index(big).unwrap().count_ones(), 40);
    }

    #[test]
    fn hilbert_enters_at_origin() {
        assert_eq!(hilbert_index(CellCoord::new(0, 0, 0, 1)).unwrap(), 0);
        assert_eq!(hilbert_index(CellCoord::new(0, 0, 0, 6)).unwrap(), 0);
        assert!(hilbert_index(CellCoord::new(0, 4, 0, 2)).is_err());
    }

    #[test]
    fn hilbert_bijective_and_face_adjacent() {
        for level in 1..=4 {
            let path = walk(CurveKind::Hilbert, level);
            for w in path.windows(2) {
                assert!(face_adjacent(&w[0], &w[1]), "level {level}: {w:?}");
            }
        }
        let _ = walk(CurveKind::Morton, 4);
    }

    #[test]
    fn hilbert_nests_across_levels() {
        for c in cells(3) {
            let fine = hilbert_index(c).unwrap();
            let coarse = hilbert_index(CellCoord::new(c.x >> 1, c.y >> 1, c.z >> 1, 2)).unwrap();
            assert_eq!(fine >> 3, coarse);
        }
    }

    #[test]
    fn morton_has_jumps_hilbert_is_more_local() {
        let m = walk(CurveKind::Morton, 2);
        assert!(m.windows(2).any(|w| !face_adjacent(&w[0], &w[1])));
        let h4 = mean_step(&walk(CurveKind::Hilbert, 4));
        let m4 = mean_step(&walk(CurveKind::Morton, 4));
        assert!(h4 < m4, "hilbert {h4} morton {m4}");
        assert_eq!(h4, 1.0);
    }

    #[test]
    fn bricks_in_x_order() {
        let f = Forest::create([4, 1, 1], Aabb::unit(), 0).unwrap();
        let order = order_leaves(&f, CurveKind::Morton);
        let xs: Vec<u32> = order.iter().map(|b| b.root_index()[0]).collect();
        assert_eq!(xs, vec![0, 1, 2, 3]);
        assert_eq!(order_leaves(&f, CurveKind::Hilbert), order);
    }

    #[test]
    fn level_one_morton_is_octant_order() {
        let f = Forest::create([1, 1, 1], Aabb::unit(), 1).unwrap();
        let order = order_leaves(&f, CurveKind::Morton);
        let octs: Vec<u8> = order.iter().map(|b| b.octant().unwrap()).collect();
        assert_eq!(octs, (0..8).collect::<Vec<_>>());
    }

    /// Order leaves by the smallest curve index of any of their cells in the
    /// fully refined forest.
    fn collapsed_order(f: &Forest, kind: CurveKind) -> Vec<BlockId> {
        let fine = f.leaves().iter().map(|b| b.level()).max().unwrap();
        let dims = f.root_dims();
        let mut keyed: Vec<((u32, u32, u32), u128, BlockId)> = Vec::new();
        for b in f.leaves() {
            let s = fine - b.level();
            let n = 1u32 << s;
            let c = b.coord();
            let mut best = u128::MAX;
            for dz in 0..n {
                for dy in 0..n {
                    for dx in 0..n {
                        let cell = CellCoord::new((c[0] << s) + dx, (c[1] << s) + dy, (c[2] << s) + dz, fine);
                        best = best.min(curve_index(kind, cell).unwrap());
                    }
                }
            }
            let r = b.root_index();
            keyed.push(((r[2], r[1], r[0]), best, *b));
        }
        let _ = dims;
        keyed.sort();
        keyed.into_iter().map(|k| k.2).collect()
    }

    #[test]
    fn mixed_levels_collapse_to_first_descendant() {
        for kind in [CurveKind::Morton, CurveKind::Hilbert] {
            let mut f = Forest::create([2, 1, 2], Aabb::unit(), 1).unwrap();
            let id = BlockId::new([1, 0, 1], &[5]).unwrap();
            f.refine_block(&id).unwrap();
            f.refine_block(&id.child(2)).unwrap();
            f.enforce_two_to_one().unwrap();
            assert_eq!(order_leaves(&f, kind), collapsed_order(&f, kind), "{kind:?}");
        }
    }

    #[test]
    fn order_is_a_permutation_and_stable() {
        let mut f = Forest::create([3, 2, 1], Aabb::unit(), 1).unwrap();
        f.refine_block(&BlockId::new([2, 1, 0], &[3]).unwrap()).unwrap();
        for kind in [CurveKind::Morton, CurveKind::Hilbert] {
            let order = order_leaves(&f, kind);
            assert_eq!(order.len(), f.len());
            let set: HashSet<_> = order.iter().collect();
            assert_eq!(set.len(), f.len());
            // rebuilding the leaf set in reverse gives the same ordering
            let g = Forest::from_leaves(f.root_dims(), f.domain(), f.max_level(), order.iter().rev().copied()).unwrap();
            assert_eq!(order_leaves(&g, kind), order);
        }
    }
}
