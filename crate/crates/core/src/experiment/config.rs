use std::path::PathBuf;

use serde::Deserialize;

use crate::balance::{BalancerKind, RefinementThresholds, ThresholdRule, DEFAULT_DIFFUSIVE_ITERATIONS, DEFAULT_FLOW_ITERATIONS};
use crate::error::{Error, Result};
use crate::forest::Aabb;
use crate::metrics::DEFAULT_WINDOW;
use crate::scenario::{GravityEdge, HopperConfig};
use crate::simcluster::CostModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Static,
    Hopper,
}

/// How the root grid grows with the rank count of a static run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `4 × 4 × k` bricks refined once, for `p = 128·k`.
    Slab,
    /// `n × n × n` bricks refined once, for `p = 8·n³`.
    Cube,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticSection {
    pub fill_fraction: f64,
    pub particle_radius: f64,
    pub gravity_edge: GravityEdge,
    /// hcp periods per initial leaf along x, y, z.
    pub periods_per_leaf: [u32; 3],
    pub weight_scale: u64,
    pub layout: Layout,
    /// Extra refinement levels below the per-rank leaf; each rank starts
    /// with `8^leaf_depth` leaves.
    pub leaf_depth: u8,
}

impl Default for StaticSection {
    fn default() -> Self {
        StaticSection {
            fill_fraction: 0.125,
            particle_radius: 0.5,
            gravity_edge: GravityEdge::XLowYLow,
            periods_per_leaf: [3, 3, 4],
            weight_scale: 78,
            layout: Layout::Slab,
            leaf_depth: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopperSection {
    pub cone_half_angle: f64,
    pub orifice_radius: f64,
    pub tank_min: [f64; 3],
    pub tank_max: [f64; 3],
    pub lattice_spacing: f64,
    pub particle_radius: f64,
    pub dt: f64,
    pub gravity: [f64; 3],
    /// Scales orifice and tank about the axis.
    pub scale: f64,
    pub root_dims: [u32; 3],
    /// Contacts are sampled for the windowed step time every this many steps.
    pub sample_every: u64,
}

impl Default for HopperSection {
    fn default() -> Self {
        let h = HopperConfig::default();
        HopperSection {
            cone_half_angle: h.cone_half_angle,
            orifice_radius: h.orifice_radius,
            tank_min: h.tank.min,
            tank_max: h.tank.max,
            lattice_spacing: h.lattice_spacing,
            particle_radius: h.particle_radius,
            dt: h.dt,
            gravity: h.gravity,
            scale: 1.0,
            root_dims: [4, 4, 4],
            sample_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    /// `refine_above = refine_factor · total/p` unless set explicitly.
    pub refine_factor: f64,
    pub refine_above: Option<f64>,
    pub coarsen_below: Option<f64>,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            refine_factor: 2.0,
            refine_above: None,
            coarsen_below: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioKind,
    #[serde(default)]
    balancers: Option<Vec<String>>,
    #[serde(default)]
    p_sweep: Option<Vec<u32>>,
    #[serde(default)]
    iterations: Option<u32>,
    #[serde(default)]
    flow_iterations: Option<u32>,
    #[serde(default)]
    window: Option<u32>,
    #[serde(default)]
    rebalance_interval: Option<u64>,
    #[serde(default)]
    total_steps: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default, rename = "static")]
    static_: StaticSection,
    #[serde(default)]
    hopper: HopperSection,
    #[serde(default)]
    thresholds: ThresholdSection,
    #[serde(default)]
    cost_model: CostModel,
}

/// A validated experiment description with all defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub balancers: Vec<BalancerKind>,
    pub p_sweep: Vec<u32>,
    pub iterations: u32,
    pub flow_iterations: u32,
    pub window: u32,
    pub rebalance_interval: u64,
    pub total_steps: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub static_scenario: StaticSection,
    pub hopper: HopperSection,
    pub thresholds: ThresholdSection,
    pub cost_model: CostModel,
}

impl ExperimentConfig {
    pub fn threshold_rule(&self) -> ThresholdRule {
        match (self.thresholds.refine_above, self.thresholds.coarsen_below) {
            (Some(r), c) => ThresholdRule::Fixed(RefinementThresholds {
                refine_above: r,
                coarsen_below: c.unwrap_or(r / 16.0),
            }),
            (None, _) => ThresholdRule::Relative {
                refine_factor: self.thresholds.refine_factor,
            },
        }
    }

    pub fn hopper_config(&self) -> HopperConfig {
        let h = &self.hopper;
        HopperConfig {
            cone_half_angle: h.cone_half_angle,
            orifice_radius: h.orifice_radius,
            tank: Aabb {
                min: h.tank_min,
                max: h.tank_max,
            },
            lattice_spacing: h.lattice_spacing,
            particle_radius: h.particle_radius,
            velocity_seed: self.seed,
            dt: h.dt,
            gravity: h.gravity,
        }
        .scaled(h.scale)
    }

    /// Parse a balancer name, giving a bare `diffusive` the configured
    /// iteration counts.
    pub fn parse_balancer(&self, name: &str) -> Result<BalancerKind> {
        parse_balancer(name, self.iterations, self.flow_iterations)
    }

    /// Re-check invariants after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        if self.p_sweep.is_empty() {
            return Err(Error::config("p_sweep", "must not be empty"));
        }
        for (i, &p) in self.p_sweep.iter().enumerate() {
            if p == 0 {
                return Err(Error::config(format!("p_sweep[{i}]"), "rank counts must be positive"));
            }
            if self.scenario == ScenarioKind::Static {
                root_grid(self.static_scenario.layout, p).map_err(|e| match e {
                    Error::Config { message, .. } => Error::config(format!("p_sweep[{i}]"), message),
                    other => other,
                })?;
            }
        }
        if self.balancers.is_empty() {
            return Err(Error::config("balancers", "must not be empty"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be positive"));
        }
        if self.flow_iterations == 0 {
            return Err(Error::config("flow_iterations", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be positive"));
        }
        self.cost_model.validate()?;
        let t = &self.thresholds;
        if !(t.refine_factor > 0.0) {
            return Err(Error::config("thresholds.refine_factor", "must be positive"));
        }
        if let ThresholdRule::Fixed(fixed) = self.threshold_rule() {
            fixed.validate()?;
        } else if t.coarsen_below.is_some() {
            return Err(Error::config("thresholds.coarsen_below", "needs thresholds.refine_above as well"));
        }
        match self.scenario {
            ScenarioKind::Static => {
                let s = &self.static_scenario;
                if !(s.fill_fraction > 0.0 && s.fill_fraction <= 1.0) {
                    return Err(Error::config("static.fill_fraction", "must lie in (0, 1]"));
                }
                if !(s.particle_radius > 0.0) {
                    return Err(Error::config("static.particle_radius", "must be positive"));
                }
                if s.periods_per_leaf.contains(&0) {
                    return Err(Error::config("static.periods_per_leaf", "must be positive"));
                }
                if s.weight_scale == 0 {
                    return Err(Error::config("static.weight_scale", "must be positive"));
                }
                if s.leaf_depth > 2 {
                    return Err(Error::config("static.leaf_depth", "must be 0, 1 or 2"));
                }
            }
            ScenarioKind::Hopper => {
                if self.rebalance_interval == 0 {
                    return Err(Error::config("rebalance_interval", "must be positive"));
                }
                if self.total_steps > 0 && self.total_steps < self.rebalance_interval {
                    return Err(Error::config(
                        "total_steps",
                        format!("{} is shorter than rebalance_interval {}", self.total_steps, self.rebalance_interval),
                    ));
                }
                let h = &self.hopper;
                if !(h.scale > 0.0) {
                    return Err(Error::config("hopper.scale", "must be positive"));
                }
                if h.sample_every == 0 {
                    return Err(Error::config("hopper.sample_every", "must be positive"));
                }
                if h.root_dims.contains(&0) {
                    return Err(Error::config("hopper.root_dims", "must be positive"));
                }
                self.hopper_config().validate().map_err(|e| Error::config("hopper", e.to_string()))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_balancer(name: &str, iterations: u32, flow_iterations: u32) -> Result<BalancerKind> {
    let kind: BalancerKind = name.parse()?;
    Ok(match kind {
        BalancerKind::Diffusive { .. } if name.trim().eq_ignore_ascii_case("diffusive") => BalancerKind::Diffusive {
            iterations,
            flow_iterations,
        },
        BalancerKind::Diffusive { iterations, .. } if !name.contains(',') => BalancerKind::Diffusive {
            iterations,
            flow_iterations,
        },
        k => k,
    })
}

/// Root bricks and initial level giving exactly `p` leaves.
pub fn root_grid(layout: Layout, p: u32) -> Result<([u32; 3], u8)> {
    if p == 1 {
        return Ok(([1, 1, 1], 0));
    }
    match layout {
        Layout::Slab if p % 128 == 0 => Ok(([4, 4, p / 128], 1)),
        Layout::Slab => Err(Error::config("p_sweep", format!("slab layout needs p = 1 or a multiple of 128, got {p}"))),
        Layout::Cube => {
            let n = (p / 8) as f64;
            let side = n.cbrt().round() as u32;
            if p % 8 == 0 && side.pow(3) * 8 == p {
                Ok(([side; 3], 1))
            } else {
                Err(Error::config("p_sweep", format!("cube layout needs p = 1 or 8·n³, got {p}")))
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse TOML text into a validated config. Unknown keys are rejected.
pub fn validate_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let iterations = raw.iterations.unwrap_or(DEFAULT_DIFFUSIVE_ITERATIONS);
    let flow_iterations = raw.flow_iterations.unwrap_or(DEFAULT_FLOW_ITERATIONS);
    let default_p = match raw.scenario {
        ScenarioKind::Static => vec![128],
        ScenarioKind::Hopper => vec![64],
    };
    let names = raw.balancers.unwrap_or_else(|| vec!["sfc_hilbert".into(), "sfc_morton".into(), "diffusive".into()]);
    let mut balancers = Vec::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        let k = parse_balancer(n, iterations, flow_iterations).map_err(|e| match e {
            Error::Config { message, .. } => Error::config(format!("balancers[{i}]"), message),
            other => other,
        })?;
        balancers.push(k);
    }
    let cfg = ExperimentConfig {
        scenario: raw.scenario,
        balancers,
        p_sweep: raw.p_sweep.unwrap_or(default_p),
        iterations,
        flow_iterations,
        window: raw.window.unwrap_or(DEFAULT_WINDOW),
        rebalance_interval: raw.rebalance_interval.unwrap_or(100),
        total_steps: raw.total_steps.unwrap_or(match raw.scenario {
            ScenarioKind::Static => 0,
            ScenarioKind::Hopper => 2000,
        }),
        seed: raw.seed.unwrap_or(42),
        output: raw.output,
        static_scenario: raw.static_,
        hopper: raw.hopper,
        thresholds: raw.thresholds,
        cost_model: raw.cost_model,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    validate_config(&text)
}
