//! Particle workloads that feed the load balancer.
//!
//! Two scenarios are provided: a static box fill on an hcp lattice whose
//! particles never move, and a scaled hopper discharge driven by a kinematic
//! mover. The balancer only ever sees per-leaf counts derived from these.

mod contacts;
mod hcp;
mod hopper;

pub use contacts::{
    contact_degrees, count_contacts, for_each_contact, particles_per_leaf, CONTACT_TOLERANCE,
};
pub use hcp::{GravityEdge, StaticScenarioConfig};
pub use hopper::{HopperConfig, HopperState};

use crate::error::{Error, Result};

/// Uniform-radius spheres. `velocities` is empty for static scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub positions: Vec<[f64; 3]>,
    pub radius: f64,
    pub velocities: Vec<[f64; 3]>,
}

impl ParticleSet {
    pub fn new(positions: Vec<[f64; 3]>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("particle radius {radius} must be positive")));
        }
        Ok(ParticleSet {
            positions,
            radius,
            velocities: Vec::new(),
        })
    }

    pub fn empty(radius: f64) -> Self {
        ParticleSet {
            positions: Vec::new(),
            radius,
            velocities: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}
