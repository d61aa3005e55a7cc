use serde::{Deserialize, Serialize};

use super::ParticleSet;
use crate::error::{Error, Result};
use crate::forest::Aabb;

/// The four box edges parallel to z; gravity points from the box center
/// towards the chosen one and the fill starts there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityEdge {
    XLowYLow,
    XHighYLow,
    XLowYHigh,
    XHighYHigh,
}

impl GravityEdge {
    fn high(&self) -> (bool, bool) {
        match self {
            GravityEdge::XLowYLow => (false, false),
            GravityEdge::XHighYLow => (true, false),
            GravityEdge::XLowYHigh => (false, true),
            GravityEdge::XHighYHigh => (true, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticScenarioConfig {
    pub domain: Aabb,
    pub fill_fraction: f64,
    pub particle_radius: f64,
    pub gravity_edge: GravityEdge,
}

// Lattice geometry for nearest-neighbor distance d. Close-packed layers are
// normal to y; rows inside a layer run along z with spacing d and are
// ROW_PITCH·d apart in x. Layers alternate A/B (hcp stacking).
const ROW_PITCH: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2
const B_SHIFT_X: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
const LAYER_PITCH: f64 = 0.816_496_580_927_726; // sqrt(2/3)

impl StaticScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        Aabb::new(self.domain.min, self.domain.max)?;
        if !(self.particle_radius > 0.0) {
            return Err(Error::Geometry("particle_radius must be positive".into()));
        }
        if !(self.fill_fraction > 0.0 && self.fill_fraction <= 1.0) {
            return Err(Error::Geometry(format!(
                "fill_fraction {} must lie in (0, 1]",
                self.fill_fraction
            )));
        }
        let d = 2.0 * self.particle_radius;
        let cell = d * d * d / std::f64::consts::SQRT_2;
        if self.fill_fraction * self.domain.volume() < cell {
            return Err(Error::Geometry(
                "filled volume is smaller than one particle cell".into(),
            ));
        }
        Ok(())
    }

    /// Box whose extents are whole multiples of the lattice periods, sized so
    /// that every leaf of a `root_dims` grid refined to `level` holds exactly
    /// `32·m[0]·m[1]·m[2]` particles when full (and each child an eighth).
    pub fn commensurate(
        root_dims: [u32; 3],
        level: u8,
        periods_per_leaf: [u32; 3],
        particle_radius: f64,
        fill_fraction: f64,
        gravity_edge: GravityEdge,
    ) -> Result<Self> {
        let leaf = Self::commensurate_leaf_extent(periods_per_leaf, particle_radius);
        let per_axis = |k: usize| leaf[k] * ((root_dims[k] as u64) << level) as f64;
        let domain = Aabb::new([0.0; 3], [per_axis(0), per_axis(1), per_axis(2)])?;
        let cfg = StaticScenarioConfig {
            domain,
            fill_fraction,
            particle_radius,
            gravity_edge,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn commensurate_leaf_extent(periods_per_leaf: [u32; 3], particle_radius: f64) -> [f64; 3] {
        let d = 2.0 * particle_radius;
        let m = periods_per_leaf.map(|v| v as f64);
        [
            4.0 * m[0] * ROW_PITCH * d,
            4.0 * m[1] * LAYER_PITCH * d,
            2.0 * m[2] * d,
        ]
    }

    /// Normalized distance from the gravity edge below which sites are filled.
    fn fill_level(&self) -> f64 {
        let f = self.fill_fraction;
        if f <= 0.5 {
            (2.0 * f).sqrt()
        } else {
            2.0 - (2.0 * (1.0 - f)).sqrt()
        }
    }

    /// Expected particle count from the hcp number density `sqrt(2)/d³`.
    pub fn analytic_count(&self) -> f64 {
        let d = 2.0 * self.particle_radius;
        self.fill_fraction * self.domain.volume() * std::f64::consts::SQRT_2 / (d * d * d)
    }

    pub fn generate_hcp_fill(&self) -> Result<ParticleSet> {
        self.validate()?;
        let d = 2.0 * self.particle_radius;
        let (lo, hi) = (self.domain.min, self.domain.max);
        let e = self.domain.extent();
        let (x_high, y_high) = self.gravity_edge.high();
        let level = self.fill_level();

        let row_dx = ROW_PITCH * d;
        let layer_dy = LAYER_PITCH * d;
        let offset_x = 0.5 * B_SHIFT_X * d;
        let offset_y = 0.5 * layer_dy;
        let offset_z = 0.25 * d;
        let per_row = (e[2] / d + 1e-9).floor() as usize;

        let mut positions = Vec::new();
        let mut ly = 0usize;
        loop {
            let y = lo[1] + offset_y + ly as f64 * layer_dy;
            if y >= hi[1] {
                break;
            }
            let v = if y_high { (hi[1] - y) / e[1] } else { (y - lo[1]) / e[1] };
            let b_layer = ly % 2 == 1;
            let mut ix = 0usize;
            loop {
                let x = lo[0] + offset_x + ix as f64 * row_dx + if b_layer { B_SHIFT_X * d } else { 0.0 };
                if x >= hi[0] {
                    break;
                }
                let u = if x_high { (hi[0] - x) / e[0] } else { (x - lo[0]) / e[0] };
                if u + v < level {
                    let half = (ix % 2) as u32 + b_layer as u32;
                    let phase = if half == 1 { 0.5 * d } else { 0.0 };
                    for iz in 0..per_row {
                        positions.push([x, y, lo[2] + offset_z + phase + iz as f64 * d]);
                    }
                }
                ix += 1;
            }
            ly += 1;
        }
        ParticleSet::new(positions, self.particle_radius)
    }
}
