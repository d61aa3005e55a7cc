use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParticleSet;
use crate::error::{Error, Result};
use crate::forest::Aabb;

/// Conical hopper above a box-shaped collecting tank.
///
/// The cone axis is the vertical line through the center of the tank's
/// footprint. The orifice sits in the tank's top plane and the cone widens
/// upwards until its rim radius equals half the narrower tank width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopperConfig {
    /// Half opening angle of the cone, measured from the axis, in degrees.
    pub cone_half_angle: f64,
    pub orifice_radius: f64,
    pub tank: Aabb,
    pub lattice_spacing: f64,
    pub particle_radius: f64,
    pub velocity_seed: u64,
    pub dt: f64,
    pub gravity: [f64; 3],
}

impl Default for HopperConfig {
    /// Desk-sized hopper: about 3·10⁴ particles, with the cone angle and
    /// grain size of the full-scale setup and proportionally shrunk orifice.
    fn default() -> Self {
        HopperConfig {
            cone_half_angle: 45.0,
            orifice_radius: 7.3,
            tank: Aabb {
                min: [-32.0, -32.0, 0.0],
                max: [32.0, 32.0, 40.0],
            },
            lattice_spacing: 1.0,
            particle_radius: 0.5,
            velocity_seed: 42,
            dt: 0.01,
            gravity: [0.0, 0.0, -1.0],
        }
    }
}

impl HopperConfig {
    pub fn validate(&self) -> Result<()> {
        Aabb::new(self.tank.min, self.tank.max)?;
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < 90.0) {
            return Err(Error::Geometry(format!(
                "cone_half_angle {} must lie strictly between 0 and 90 degrees",
                self.cone_half_angle
            )));
        }
        if !(self.particle_radius > 0.0) {
            return Err(Error::Geometry("particle_radius must be positive".into()));
        }
        if !(self.orifice_radius > self.particle_radius) {
            return Err(Error::Geometry(format!(
                "orifice_radius {} must exceed particle_radius {}",
                self.orifice_radius, self.particle_radius
            )));
        }
        if !(self.lattice_spacing >= 2.0 * self.particle_radius) {
            return Err(Error::Geometry(
                "lattice_spacing must be at least one particle diameter".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Geometry("dt must be positive".into()));
        }
        if self.rim_radius() <= self.orifice_radius {
            return Err(Error::Geometry(
                "orifice_radius must be smaller than half the tank width".into(),
            ));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::Geometry("gravity must be finite".into()));
        }
        Ok(())
    }

    /// Same hopper with the orifice and the tank (about its axis) scaled by
    /// `factor`; grain size, cone angle and time step are kept.
    pub fn scaled(&self, factor: f64) -> Self {
        let axis = self.axis();
        let (lo, hi) = (self.tank.min, self.tank.max);
        HopperConfig {
            orifice_radius: self.orifice_radius * factor,
            tank: Aabb {
                min: [
                    axis[0] + (lo[0] - axis[0]) * factor,
                    axis[1] + (lo[1] - axis[1]) * factor,
                    hi[2] - (hi[2] - lo[2]) * factor,
                ],
                max: [axis[0] + (hi[0] - axis[0]) * factor, axis[1] + (hi[1] - axis[1]) * factor, hi[2]],
            },
            ..*self
        }
    }

    pub fn axis(&self) -> [f64; 2] {
        let c = self.tank.center();
        [c[0], c[1]]
    }

    pub fn orifice_z(&self) -> f64 {
        self.tank.max[2]
    }

    pub fn rim_radius(&self) -> f64 {
        let e = self.tank.extent();
        0.5 * e[0].min(e[1])
    }

    pub fn cone_height(&self) -> f64 {
        (self.rim_radius() - self.orifice_radius) / self.tan_angle()
    }

    fn tan_angle(&self) -> f64 {
        self.cone_half_angle.to_radians().tan()
    }

    /// Box around tank and cone.
    pub fn domain(&self) -> Aabb {
        let mut max = self.tank.max;
        max[2] = self.orifice_z() + self.cone_height();
        Aabb { min: self.tank.min, max }
    }

    /// Largest axis distance a particle center may have at height `z` inside
    /// the cone.
    pub fn cone_center_radius(&self, z: f64) -> f64 {
        self.orifice_radius - self.particle_radius + (z - self.orifice_z()) * self.tan_angle()
    }

    /// Whether a particle centered at `q` fits inside the cone.
    pub fn in_cone(&self, q: [f64; 3]) -> bool {
        let a = self.axis();
        let z_lo = self.orifice_z() + self.particle_radius;
        let z_hi = self.domain().max[2] - self.particle_radius;
        q[2] >= z_lo && q[2] <= z_hi && (q[0] - a[0]).hypot(q[1] - a[1]) <= self.cone_center_radius(q[2])
    }
}

/// Particles plus the column height field of the pile in the tank.
///
/// Moving particles live on the voxel lattice of the initial fill (one voxel
/// per lattice spacing) and exclude each other. Gravity is integrated into a
/// fall speed; whenever a particle has travelled a full spacing it hops one
/// voxel down, or diagonally down towards the axis if that cell is taken.
/// Voxels outside the cone are walls, the orifice connects cone and tank,
/// and particles reaching the pile in the tank stack onto its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HopperState {
    pub config: HopperConfig,
    pub particles: ParticleSet,
    pub settled: Vec<bool>,
    pub steps: u64,
    cells: Vec<[i64; 3]>,
    progress: Vec<f64>,
    grid: VoxelGrid,
    heights: Vec<u32>,
}

/// Dense voxel occupancy over the hopper domain.
#[derive(Debug, Clone, PartialEq)]
struct VoxelGrid {
    lo: [i64; 3],
    dims: [i64; 3],
    occupant: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

impl VoxelGrid {
    fn contains(&self, c: [i64; 3]) -> bool {
        (0..3).all(|k| c[k] >= self.lo[k] && c[k] < self.lo[k] + self.dims[k])
    }

    fn slot(&self, c: [i64; 3]) -> usize {
        let d: [i64; 3] = std::array::from_fn(|k| c[k] - self.lo[k]);
        ((d[2] * self.dims[1] + d[1]) * self.dims[0] + d[0]) as usize
    }

    fn column(&self, c: [i64; 3]) -> usize {
        ((c[1] - self.lo[1]) * self.dims[0] + (c[0] - self.lo[0])) as usize
    }
}

// Downward hops tried in order after the straight drop.
const DIAGONALS: [[i64; 2]; 8] = [[-1, 0], [1, 0], [0, -1], [0, 1], [-1, -1], [1, -1], [-1, 1], [1, 1]];

impl HopperState {
    /// Simple cubic lattice filling the cone, random velocities in `[-1, 1]³`
    /// from `velocity_seed`.
    pub fn generate(cfg: &HopperConfig) -> Result<Self> {
        cfg.validate()?;
        let s = cfg.lattice_spacing;
        let r = cfg.particle_radius;
        let dom = cfg.domain();
        let a = cfg.axis();
        let z_ref = cfg.orifice_z() + r;
        let reach = (cfg.rim_radius() / s).ceil() as i64;
        let k_top = ((dom.max[2] - r - z_ref) / s + 1e-9).floor() as i64;
        let i_lo = -(((a[0] - dom.min[0] - r) / s + 1e-9).floor() as i64);
        let i_hi = ((dom.max[0] - r - a[0]) / s + 1e-9).floor() as i64;
        let j_lo = -(((a[1] - dom.min[1] - r) / s + 1e-9).floor() as i64);
        let j_hi = ((dom.max[1] - r - a[1]) / s + 1e-9).floor() as i64;
        let k_lo = -(((z_ref - dom.min[2] - r) / s + 1e-9).floor() as i64);
        let grid = VoxelGrid {
            lo: [i_lo, j_lo, k_lo],
            dims: [i_hi - i_lo + 1, j_hi - j_lo + 1, k_top - k_lo + 1],
            occupant: vec![EMPTY; ((i_hi - i_lo + 1) * (j_hi - j_lo + 1) * (k_top - k_lo + 1)) as usize],
        };
        let columns = (grid.dims[0] * grid.dims[1]) as usize;
        let mut state = HopperState {
            config: *cfg,
            particles: ParticleSet::empty(r),
            settled: Vec::new(),
            steps: 0,
            cells: Vec::new(),
            progress: Vec::new(),
            grid,
            heights: vec![0; columns],
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.velocity_seed);
        for k in 0..=k_top {
            for j in -reach..=reach {
                for i in -reach..=reach {
                    let c = [i, j, k];
                    if state.grid.contains(c) && cfg.in_cone(state.center(c)) {
                        let slot = state.grid.slot(c);
                        state.grid.occupant[slot] = state.cells.len() as u32;
                        state.particles.positions.push(state.center(c));
                        state.particles.velocities.push([
                            rng.gen_range(-1.0..=1.0),
                            rng.gen_range(-1.0..=1.0),
                            rng.gen_range(-1.0..=1.0),
                        ]);
                        state.cells.push(c);
                    }
                }
            }
        }
        let n = state.cells.len();
        state.settled = vec![false; n];
        state.progress = vec![0.0; n];
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn settled_count(&self) -> usize {
        self.settled.iter().filter(|&&s| s).count()
    }

    /// Particles whose center is below the orifice plane.
    pub fn in_tank_count(&self) -> usize {
        let z0 = self.config.orifice_z();
        self.particles.positions.iter().filter(|q| q[2] < z0).count()
    }

    fn center(&self, c: [i64; 3]) -> [f64; 3] {
        let cfg = &self.config;
        let s = cfg.lattice_spacing;
        let a = cfg.axis();
        [a[0] + c[0] as f64 * s, a[1] + c[1] as f64 * s, cfg.orifice_z() + cfg.particle_radius + c[2] as f64 * s]
    }

    /// Whether a moving particle may occupy voxel `c`, coming from `from`.
    fn open(&self, from: [i64; 3], c: [i64; 3]) -> bool {
        if !self.grid.contains(c) || self.grid.occupant[self.grid.slot(c)] != EMPTY {
            return false;
        }
        let q = self.center(c);
        if c[2] < 0 && q[2] < self.pile_top(c) {
            return false;
        }
        if c[2] >= 0 {
            return self.config.in_cone(q);
        }
        if from[2] >= 0 {
            let a = self.config.axis();
            let p = self.center(from);
            return (p[0] - a[0]).hypot(p[1] - a[1]) <= self.config.orifice_radius - self.config.particle_radius;
        }
        true
    }

    fn pile_top(&self, c: [i64; 3]) -> f64 {
        let cfg = &self.config;
        cfg.tank.min[2] + cfg.particle_radius + self.heights[self.grid.column(c)] as f64 * cfg.lattice_spacing
    }

    /// One time step: integrate gravity into the fall speed, hop particles
    /// bottom-up, and settle those that reach the pile.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step {dt} must be positive")));
        }
        let g = self.config.gravity;
        let s = self.config.lattice_spacing;
        let mut order: Vec<usize> = (0..self.len()).filter(|&n| !self.settled[n]).collect();
        order.sort_by_key(|&n| (self.cells[n][2], n));

        for n in order {
            let mut v = self.particles.velocities[n];
            for k in 0..3 {
                v[k] += g[k] * dt;
            }
            let fall = (-v[2]).max(0.0);
            self.progress[n] += fall * dt / s;
            let mut blocked_by = None;
            while self.progress[n] >= 1.0 {
                let c = self.cells[n];
                let below = self.center([c[0], c[1], c[2] - 1]);
                if c[2] < 0 && below[2] < self.pile_top(c) {
                    self.settle(n);
                    break;
                }
                let r2 = c[0] * c[0] + c[1] * c[1];
                let down = std::iter::once([0, 0])
                    .chain(DIAGONALS.iter().copied())
                    .map(|d| [c[0] + d[0], c[1] + d[1], c[2] - 1]);
                // a particle wedged against the wall may slide inwards on its level
                let inward = DIAGONALS
                    .iter()
                    .map(|d| [c[0] + d[0], c[1] + d[1], c[2]])
                    .filter(|t| t[0] * t[0] + t[1] * t[1] < r2);
                let pick = |cands: &mut dyn Iterator<Item = [i64; 3]>| {
                    cands
                        .filter(|&t| self.open(c, t))
                        .min_by_key(|&t| (t[..2] != c[..2], t[0] * t[0] + t[1] * t[1]))
                };
                let target = pick(&mut down.clone()).or_else(|| pick(&mut inward.clone()));
                match target {
                    Some(t) => {
                        let (from, to) = (self.grid.slot(c), self.grid.slot(t));
                        self.grid.occupant[from] = EMPTY;
                        self.grid.occupant[to] = n as u32;
                        self.cells[n] = t;
                        self.progress[n] -= 1.0;
                    }
                    None => {
                        let under = [c[0], c[1], c[2] - 1];
                        if self.grid.contains(under) {
                            let o = self.grid.occupant[self.grid.slot(under)];
                            if o != EMPTY {
                                blocked_by = Some(o as usize);
                            }
                        }
                        self.progress[n] = self.progress[n].min(1.0);
                        break;
                    }
                }
            }
            if self.settled[n] {
                continue;
            }
            if self.progress[n] >= 1.0 {
                // resting: take over the fall speed of whatever holds it up
                let vz = blocked_by.map_or(0.0, |b| self.particles.velocities[b][2].min(0.0));
                v = [0.0, 0.0, vz.max(v[2])];
                self.progress[n] = 0.0;
            }
            self.particles.velocities[n] = v;
            self.particles.positions[n] = self.center(self.cells[n]);
        }
        self.steps += 1;
        Ok(())
    }

    fn settle(&mut self, n: usize) {
        let c = self.cells[n];
        let slot = self.grid.slot(c);
        self.grid.occupant[slot] = EMPTY;
        let col = self.roll(c);
        let [nx, _, _] = self.grid.dims;
        let top = [self.grid.lo[0] + (col as i64 % nx), self.grid.lo[1] + (col as i64 / nx), c[2]];
        let mut q = self.center(top);
        q[2] = self.config.tank.min[2] + self.config.particle_radius + self.heights[col] as f64 * self.config.lattice_spacing;
        self.heights[col] += 1;
        self.settled[n] = true;
        self.progress[n] = 0.0;
        self.particles.positions[n] = q;
        self.particles.velocities[n] = [0.0; 3];
    }

    /// Repose rule: move to the lowest of the 8 surrounding columns while it
    /// is at least two particles lower.
    fn roll(&self, c: [i64; 3]) -> usize {
        let [nx, ny, _] = self.grid.dims;
        let mut col = self.grid.column(c) as i64;
        loop {
            let (i, j) = (col % nx, col / nx);
            let mut best = col;
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (ni, nj) = (i + di, j + dj);
                    if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                        continue;
                    }
                    let m = nj * nx + ni;
                    if self.heights[m as usize] < self.heights[best as usize] {
                        best = m;
                    }
                }
            }
            if best != col && self.heights[best as usize] + 1 < self.heights[col as usize] {
                col = best;
            } else {
                return col as usize;
            }
        }
    }
}
