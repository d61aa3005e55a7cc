//! Forest of octrees over a grid of root bricks.
//!
//! The domain is cut into `nx × ny × nz` equal bricks. Every brick is the
//! root of an octree whose nodes are split exactly at their center; the
//! leaves of all octrees are the subdomains that get distributed to ranks.
//!
//! Block geometry is kept in integer lattice coordinates. A block at level
//! `l` inside its brick has coordinates in `0..2^l`; floating point boxes are
//! derived on demand by scaling the integer corners once, so the leaves of a
//! forest always tile the domain without gaps.
//!
//! Octant digits use bit 0 for the high-x half, bit 1 for high-y and bit 2
//! for high-z. The space-filling curves in [`crate::sfc`] use the same
//! convention.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Default refinement bound of a forest.
pub const DEFAULT_MAX_LEVEL: u8 = 10;

/// Hard bound on `max_level`: coordinates are `u32` and octant paths are
/// packed into a `u64` (3 bits per level).
pub const LEVEL_LIMIT: u8 = 20;

/// Upper bound on the neighbors of a leaf once the 2:1 constraint holds:
/// 6 faces × 4 + 12 edges × 2 + 8 corners.
pub const MAX_BALANCED_NEIGHBORS: usize = 56;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for k in 0..3 {
            if !(min[k] < max[k]) || !min[k].is_finite() || !max[k].is_finite() {
                return Err(Error::Geometry(format!(
                    "box min {min:?} must be strictly below max {max:?} on every axis"
                )));
            }
        }
        Ok(Aabb { min, max })
    }

    pub fn unit() -> Self {
        Aabb {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    /// Closed containment test.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }
}

/// Identifier of an octree node: root brick index plus the octant path from
/// the root. The path is stored as lattice coordinates at `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId {
    root: [u32; 3],
    level: u8,
    coord: [u32; 3],
}

impl BlockId {
    pub fn root(root: [u32; 3]) -> Self {
        BlockId {
            root,
            level: 0,
            coord: [0; 3],
        }
    }

    pub fn new(root: [u32; 3], path: &[u8]) -> Result<Self> {
        if path.len() > LEVEL_LIMIT as usize {
            return Err(Error::Domain(format!(
                "octant path of length {} exceeds the level limit {LEVEL_LIMIT}",
                path.len()
            )));
        }
        let mut id = BlockId::root(root);
        for &o in path {
            if o > 7 {
                return Err(Error::Domain(format!("octant digit {o} is not in 0..7")));
            }
            id = id.child(o);
        }
        Ok(id)
    }

    /// Block at `level` whose lattice coordinates inside its brick are `coord`.
    pub fn from_coord(root: [u32; 3], level: u8, coord: [u32; 3]) -> Result<Self> {
        if level > LEVEL_LIMIT {
            return Err(Error::Domain(format!(
                "level {level} exceeds the level limit {LEVEL_LIMIT}"
            )));
        }
        if coord.iter().any(|&c| (c as u64) >= (1u64 << level)) {
            return Err(Error::Domain(format!(
                "coordinates {coord:?} out of range for level {level}"
            )));
        }
        Ok(BlockId { root, level, coord })
    }

    pub fn root_index(&self) -> [u32; 3] {
        self.root
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    /// Lattice coordinates inside the root brick at this block's level.
    pub fn coord(&self) -> [u32; 3] {
        self.coord
    }

    pub fn path(&self) -> Vec<u8> {
        (1..=self.level).map(|l| self.digit(l)).collect()
    }

    /// Octant digit taken at depth `l` (1-based) on the way from the root.
    fn digit(&self, l: u8) -> u8 {
        let s = self.level - l;
        let bit = |c: u32| ((c >> s) & 1) as u8;
        bit(self.coord[0]) | (bit(self.coord[1]) << 1) | (bit(self.coord[2]) << 2)
    }

    /// Octant of this block inside its parent; `None` for roots.
    pub fn octant(&self) -> Option<u8> {
        (self.level > 0).then(|| self.digit(self.level))
    }

    pub fn child(&self, octant: u8) -> Self {
        debug_assert!(octant < 8);
        let o = octant as u32;
        BlockId {
            root: self.root,
            level: self.level + 1,
            coord: [
                (self.coord[0] << 1) | (o & 1),
                (self.coord[1] << 1) | ((o >> 1) & 1),
                (self.coord[2] << 1) | ((o >> 2) & 1),
            ],
        }
    }

    pub fn children(&self) -> [BlockId; 8] {
        std::array::from_fn(|o| self.child(o as u8))
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| self.ancestor(self.level - 1))
    }

    /// Ancestor at `level` (the block itself when `level == self.level`).
    pub fn ancestor(&self, level: u8) -> Self {
        assert!(level <= self.level, "ancestor level above block level");
        let s = self.level - level;
        BlockId {
            root: self.root,
            level,
            coord: self.coord.map(|c| c >> s),
        }
    }

    /// Strict ancestor test.
    pub fn is_ancestor_of(&self, other: &BlockId) -> bool {
        self.root == other.root && self.level < other.level && other.ancestor(self.level) == *self
    }

    /// Packed octant path, 3 bits per level, most significant digit first.
    pub(crate) fn packed_path(&self) -> u64 {
        crate::sfc::interleave3(self.coord)
    }
}

impl Ord for BlockId {
    /// Root index first, then the octant path in lexicographic order with
    /// ancestors before their descendants.
    fn cmp(&self, other: &Self) -> Ordering {
        self.root.cmp(&other.root).then_with(|| {
            let m = self.level.min(other.level);
            let a = self.packed_path() >> (3 * (self.level - m) as u32);
            let b = other.packed_path() >> (3 * (other.level - m) as u32);
            a.cmp(&b).then(self.level.cmp(&other.level))
        })
    }
}

impl PartialOrd for BlockId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} /", self.root[0], self.root[1], self.root[2])?;
        for o in self.path() {
            write!(f, " {o}")?;
        }
        Ok(())
    }
}

/// A leaf touching another leaf, with the area of the shared face (zero for
/// edge and corner contacts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: BlockId,
    pub area: f64,
}

/// Integer box in lattice units of the finest admissible level.
#[derive(Debug, Clone, Copy)]
struct IBox {
    lo: [u64; 3],
    hi: [u64; 3],
}

impl IBox {
    fn touches(&self, other: &IBox) -> bool {
        (0..3).all(|k| self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
    }

    fn overlap(&self, other: &IBox) -> [u64; 3] {
        std::array::from_fn(|k| {
            self.hi[k]
                .min(other.hi[k])
                .saturating_sub(self.lo[k].max(other.lo[k]))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    root_dims: [u32; 3],
    domain: Aabb,
    max_level: u8,
    leaves: BTreeSet<BlockId>,
}

impl Forest {
    /// Uniform forest: every brick refined to `initial_level`.
    pub fn create(root_dims: [u32; 3], domain: Aabb, initial_level: u8) -> Result<Self> {
        Self::with_max_level(root_dims, domain, initial_level, DEFAULT_MAX_LEVEL)
    }

    pub fn with_max_level(
        root_dims: [u32; 3],
        domain: Aabb,
        initial_level: u8,
        max_level: u8,
    ) -> Result<Self> {
        let domain = Aabb::new(domain.min, domain.max)?;
        if root_dims.iter().any(|&n| n == 0) {
            return Err(Error::Geometry(format!(
                "root grid dimensions {root_dims:?} must all be positive"
            )));
        }
        if max_level > LEVEL_LIMIT {
            return Err(Error::Domain(format!(
                "max_level {max_level} exceeds the level limit {LEVEL_LIMIT}"
            )));
        }
        if initial_level > max_level {
            return Err(Error::Refinement {
                id: BlockId::root([0; 3]),
                reason: format!("initial level {initial_level} exceeds max_level {max_level}"),
            });
        }
        let side = 1u32 << initial_level;
        let mut leaves = BTreeSet::new();
        for k in 0..root_dims[2] {
            for j in 0..root_dims[1] {
                for i in 0..root_dims[0] {
                    for z in 0..side {
                        for y in 0..side {
                            for x in 0..side {
                                leaves.insert(BlockId {
                                    root: [i, j, k],
                                    level: initial_level,
                                    coord: [x, y, z],
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(Forest {
            root_dims,
            domain,
            max_level,
            leaves,
        })
    }

    /// Rebuild a forest from an explicit leaf set, validating the partition.
    pub fn from_leaves(
        root_dims: [u32; 3],
        domain: Aabb,
        max_level: u8,
        leaves: impl IntoIterator<Item = BlockId>,
    ) -> Result<Self> {
        let mut forest = Forest::with_max_level(root_dims, domain, 0, max_level)?;
        forest.leaves = leaves.into_iter().collect();
        for id in &forest.leaves {
            forest.check_id(id)?;
        }
        forest.check_partition()?;
        Ok(forest)
    }

    pub fn root_dims(&self) -> [u32; 3] {
        self.root_dims
    }

    pub fn domain(&self) -> Aabb {
        self.domain
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn leaves(&self) -> &BTreeSet<BlockId> {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn is_leaf(&self, id: &BlockId) -> bool {
        self.leaves.contains(id)
    }

    pub fn num_roots(&self) -> usize {
        self.root_dims.iter().map(|&n| n as usize).product()
    }

    pub fn brick_extent(&self) -> [f64; 3] {
        let e = self.domain.extent();
        std::array::from_fn(|k| e[k] / self.root_dims[k] as f64)
    }

    fn check_id(&self, id: &BlockId) -> Result<()> {
        if (0..3).any(|k| id.root[k] >= self.root_dims[k]) {
            return Err(Error::NotFound(*id));
        }
        if id.level > self.max_level {
            return Err(Error::Refinement {
                id: *id,
                reason: format!("level exceeds max_level {}", self.max_level),
            });
        }
        Ok(())
    }

    fn ibox(&self, id: &BlockId) -> IBox {
        let s = self.max_level as u32;
        let size = 1u64 << (s - id.level as u32);
        let lo: [u64; 3] =
            std::array::from_fn(|k| ((id.root[k] as u64) << s) + id.coord[k] as u64 * size);
        IBox {
            lo,
            hi: lo.map(|v| v + size),
        }
    }

    /// Length of one lattice unit of the finest admissible level per axis.
    fn lattice_unit(&self) -> [f64; 3] {
        let b = self.brick_extent();
        let n = (1u64 << self.max_level) as f64;
        std::array::from_fn(|k| b[k] / n)
    }

    pub fn block_aabb(&self, id: &BlockId) -> Result<Aabb> {
        self.check_id(id)?;
        let level = id.level as u32;
        let e = self.domain.extent();
        let mut min = [0.0; 3];
        let mut max = [0.0; 3];
        for k in 0..3 {
            let cells = ((self.root_dims[k] as u64) << level) as f64;
            let lo = ((id.root[k] as u64) << level) + id.coord[k] as u64;
            min[k] = self.domain.min[k] + e[k] * (lo as f64 / cells);
            max[k] = if lo + 1 == (self.root_dims[k] as u64) << level {
                self.domain.max[k]
            } else {
                self.domain.min[k] + e[k] * ((lo + 1) as f64 / cells)
            };
        }
        Ok(Aabb { min, max })
    }

    pub fn refine_block(&mut self, id: &BlockId) -> Result<()> {
        if !self.leaves.contains(id) {
            return Err(Error::NotFound(*id));
        }
        if id.level >= self.max_level {
            return Err(Error::Refinement {
                id: *id,
                reason: format!("already at max_level {}", self.max_level),
            });
        }
        self.leaves.remove(id);
        self.leaves.extend(id.children());
        Ok(())
    }

    pub fn coarsen_siblings(&mut self, parent: &BlockId) -> Result<()> {
        self.check_id(parent)?;
        if parent.level >= self.max_level {
            return Err(Error::Coarsening {
                parent: *parent,
                reason: "block has no children below max_level".into(),
            });
        }
        if let Some(missing) = parent.children().iter().find(|c| !self.leaves.contains(c)) {
            return Err(Error::Coarsening {
                parent: *parent,
                reason: format!("child {missing} is not a leaf"),
            });
        }
        for c in parent.children() {
            self.leaves.remove(&c);
        }
        self.leaves.insert(*parent);
        Ok(())
    }

    /// Refine until every pair of touching leaves (faces, edges and corners)
    /// differs by at most one level. Only refines; the result is the unique
    /// minimal balanced refinement of the input.
    pub fn enforce_two_to_one(&mut self) -> Result<usize> {
        let mut splits = 0;
        let mut stack: Vec<BlockId> = self.leaves.iter().rev().copied().collect();
        while let Some(a) = stack.pop() {
            if !self.leaves.contains(&a) || a.level < 2 {
                continue;
            }
            let mut changed = false;
            let touching = self.touching_leaves(&a, &|n| self.leaves.contains(n));
            for b in touching {
                if b.level + 1 < a.level && self.leaves.contains(&b) {
                    if b.level >= self.max_level {
                        return Err(Error::Refinement {
                            id: b,
                            reason: "2:1 ripple exceeds max_level".into(),
                        });
                    }
                    self.refine_block(&b)?;
                    splits += 1;
                    stack.extend(b.children());
                    changed = true;
                }
            }
            if changed {
                stack.push(a);
            }
        }
        Ok(splits)
    }

    /// Leaves whose closed box intersects the closed box of `id`, excluding
    /// `id` itself. `id` need not be a leaf.
    fn touching_leaves(&self, id: &BlockId, is_leaf: &dyn Fn(&BlockId) -> bool) -> Vec<BlockId> {
        let q = self.ibox(id);
        let mut out = Vec::new();
        let brick = 1u64 << self.max_level;
        let mut range = [(0u32, 0u32); 3];
        for k in 0..3 {
            let lo = q.lo[k].div_ceil(brick).saturating_sub(1);
            let hi = (q.hi[k] / brick).min(self.root_dims[k] as u64 - 1);
            range[k] = (lo as u32, hi as u32);
        }
        for rk in range[2].0..=range[2].1 {
            for rj in range[1].0..=range[1].1 {
                for ri in range[0].0..=range[0].1 {
                    self.collect_touching(BlockId::root([ri, rj, rk]), &q, is_leaf, &mut out);
                }
            }
        }
        out.retain(|b| b != id);
        out
    }

    fn collect_touching(&self, node: BlockId, q: &IBox, is_leaf: &dyn Fn(&BlockId) -> bool, out: &mut Vec<BlockId>) {
        if is_leaf(&node) {
            out.push(node);
            return;
        }
        if node.level >= self.max_level {
            return;
        }
        for c in node.children() {
            if self.ibox(&c).touches(q) {
                self.collect_touching(c, q, is_leaf, out);
            }
        }
    }

    fn shared_area(&self, a: &IBox, b: &IBox, unit: &[f64; 3]) -> f64 {
        let ov = a.overlap(b);
        match ov.iter().filter(|&&v| v == 0).count() {
            1 => (0..3)
                .filter(|&k| ov[k] != 0)
                .map(|k| ov[k] as f64 * unit[k])
                .product(),
            _ => 0.0,
        }
    }

    /// All leaves sharing a face, edge or corner with leaf `id`, sorted by
    /// block id.
    pub fn neighbors(&self, id: &BlockId) -> Result<Vec<Neighbor>> {
        if !self.leaves.contains(id) {
            return Err(Error::NotFound(*id));
        }
        Ok(self.neighbors_with(id, &|b| self.leaves.contains(b)))
    }

    fn neighbors_with(&self, id: &BlockId, is_leaf: &dyn Fn(&BlockId) -> bool) -> Vec<Neighbor> {
        let unit = self.lattice_unit();
        let a = self.ibox(id);
        let mut out: Vec<Neighbor> = self
            .touching_leaves(id, is_leaf)
            .into_iter()
            .map(|b| Neighbor {
                id: b,
                area: self.shared_area(&a, &self.ibox(&b), &unit),
            })
            .collect();
        out.sort_by(|x, y| x.id.cmp(&y.id));
        out
    }

    /// Adjacency of all leaves, indexed in block id order.
    pub fn leaf_graph(&self) -> LeafGraph {
        let leaves: Vec<BlockId> = self.leaves.iter().copied().collect();
        let index: HashMap<BlockId, usize> =
            leaves.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let adj = leaves
            .iter()
            .map(|b| {
                self.neighbors_with(b, &|n| index.contains_key(n))
                    .into_iter()
                    .map(|n| (index[&n.id], n.area))
                    .collect()
            })
            .collect();
        LeafGraph { leaves, index, adj }
    }

    /// Leaf containing `p`. Points on an interior face belong to the leaf on
    /// the lower-coordinate side.
    pub fn locate(&self, p: [f64; 3]) -> Option<BlockId> {
        if !self.domain.contains(p) {
            return None;
        }
        let s = self.max_level as u32;
        let e = self.domain.extent();
        let mut cell = [0u64; 3];
        for k in 0..3 {
            let n = (self.root_dims[k] as u64) << s;
            let t = (p[k] - self.domain.min[k]) / e[k] * n as f64;
            let c = (t.ceil() as i64 - 1).clamp(0, n as i64 - 1);
            cell[k] = c as u64;
        }
        let root: [u32; 3] = cell.map(|c| (c >> s) as u32);
        let local: [u32; 3] = cell.map(|c| (c & ((1u64 << s) - 1)) as u32);
        (0..=self.max_level)
            .map(|l| BlockId {
                root,
                level: l,
                coord: local.map(|c| c >> (s - l as u32)),
            })
            .find(|b| self.leaves.contains(b))
    }

    /// Leaves form a complete, non-overlapping cover of the domain.
    pub fn check_partition(&self) -> Result<()> {
        let s = self.max_level as u32;
        let mut volume: u128 = 0;
        for id in &self.leaves {
            self.check_id(id)?;
            for l in 0..id.level {
                let a = id.ancestor(l);
                if self.leaves.contains(&a) {
                    return Err(Error::Consistency(format!(
                        "leaf {a} is an ancestor of leaf {id}"
                    )));
                }
            }
            volume += 1u128 << (3 * (s - id.level as u32));
        }
        let total = self.num_roots() as u128 * (1u128 << (3 * s));
        if volume != total {
            return Err(Error::Consistency(format!(
                "leaf volume {volume} does not match domain volume {total} lattice cells"
            )));
        }
        Ok(())
    }

    /// Largest level difference between touching leaves.
    pub fn max_level_gap(&self) -> u8 {
        self.leaves
            .iter()
            .flat_map(|a| {
                self.touching_leaves(a, &|n| self.leaves.contains(n))
                    .into_iter()
                    .map(move |b| a.level.abs_diff(b.level))
            })
            .max()
            .unwrap_or(0)
    }

    pub fn check_two_to_one(&self) -> Result<()> {
        for a in &self.leaves {
            for b in self.touching_leaves(a, &|n| self.leaves.contains(n)) {
                if a.level.abs_diff(b.level) > 1 {
                    return Err(Error::Consistency(format!(
                        "leaves {a} (level {}) and {b} (level {}) violate 2:1",
                        a.level, b.level
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.check_partition()?;
        self.check_two_to_one()
    }

    /// Line-oriented snapshot: `#` header lines with the grid, domain and
    /// level bound, then one `i j k / o1 o2 ... on` line per leaf.
    pub fn to_text(&self) -> String {
        let d = &self.domain;
        let mut s = format!(
            "# root_dims {} {} {}\n# domain {:?} {:?} {:?} {:?} {:?} {:?}\n# max_level {}\n",
            self.root_dims[0],
            self.root_dims[1],
            self.root_dims[2],
            d.min[0],
            d.min[1],
            d.min[2],
            d.max[0],
            d.max[1],
            d.max[2],
            self.max_level
        );
        for id in &self.leaves {
            s.push_str(&id.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut root_dims = None;
        let mut domain = None;
        let mut max_level = DEFAULT_MAX_LEVEL;
        let mut leaves = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut it = header.split_whitespace();
                let key = it.next().unwrap_or("");
                let vals: Vec<&str> = it.collect();
                match key {
                    "root_dims" => {
                        let v = parse_list::<u32>(&vals, 3).map_err(err)?;
                        root_dims = Some([v[0], v[1], v[2]]);
                    }
                    "domain" => {
                        let v = parse_list::<f64>(&vals, 6).map_err(err)?;
                        domain = Some(
                            Aabb::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
                                .map_err(|e| err(e.to_string()))?,
                        );
                    }
                    "max_level" => {
                        max_level = parse_list::<u8>(&vals, 1).map_err(err)?[0];
                    }
                    _ => {}
                }
                continue;
            }
            let (root, path) = line
                .split_once('/')
                .ok_or_else(|| err("expected `i j k / octants`".into()))?;
            let r = parse_list::<u32>(&root.split_whitespace().collect::<Vec<_>>(), 3)
                .map_err(err)?;
            let path: Vec<u8> = path
                .split_whitespace()
                .map(|t| t.parse::<u8>().map_err(|e| err(format!("octant `{t}`: {e}"))))
                .collect::<Result<_>>()?;
            let id = BlockId::new([r[0], r[1], r[2]], &path).map_err(|e| err(e.to_string()))?;
            leaves.push(id);
        }
        let root_dims = root_dims.ok_or(Error::Parse {
            line: 0,
            message: "missing `# root_dims` header".into(),
        })?;
        let domain = domain.ok_or(Error::Parse {
            line: 0,
            message: "missing `# domain` header".into(),
        })?;
        Forest::from_leaves(root_dims, domain, max_level, leaves)
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn parse_list<T: std::str::FromStr>(vals: &[&str], n: usize) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    if vals.len() != n {
        return Err(format!("expected {n} values, found {}", vals.len()));
    }
    vals.iter()
        .map(|v| v.parse::<T>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

/// Leaf adjacency with interface areas, leaves indexed in block id order.
#[derive(Debug, Clone)]
pub struct LeafGraph {
    pub leaves: Vec<BlockId>,
    index: HashMap<BlockId, usize>,
    /// `adj[i]` lists `(j, area)` for every leaf `j` touching leaf `i`.
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl LeafGraph {
    pub fn index_of(&self, id: &BlockId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}
