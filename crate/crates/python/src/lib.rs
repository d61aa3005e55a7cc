//! Python bindings: forests, curve indices, the prefix cut, static
//! pipeline runs and whole experiments.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use forestlb::balance::{run_pipeline, BalancerKind, RankAssignment, WeightSource, WeightSourceState};
use forestlb::experiment::{run_hopper_experiment, run_static_experiment, static_setup, validate_config, ExperimentConfig, ScenarioKind};
use forestlb::forest::{Aabb, BlockId};
use forestlb::metrics::{experiment_csv, hopper_csv, max_load};
use forestlb::scenario::ParticleSet;
use forestlb::sfc::{self, CellCoord, CurveKind};
use forestlb::simcluster::{init_cluster, windowed_step_time, Cluster};

fn err(e: forestlb::Error) -> PyErr {
    match e {
        forestlb::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn curve(name: &str) -> PyResult<CurveKind> {
    match name {
        "hilbert" => Ok(CurveKind::Hilbert),
        "morton" => Ok(CurveKind::Morton),
        _ => Err(PyValueError::new_err(format!("unknown curve {name:?}; use \"hilbert\" or \"morton\""))),
    }
}

type LeafTuple = ([u32; 3], Vec<u8>);

fn leaf_tuple(id: &BlockId) -> LeafTuple {
    (id.root_index(), id.path())
}

fn block(root: [u32; 3], path: Vec<u8>) -> PyResult<BlockId> {
    BlockId::new(root, &path).map_err(err)
}

/// Forest of octrees over a box; leaves are `(root, path)` tuples.
#[pyclass(name = "Forest")]
#[derive(Clone)]
struct PyForest {
    inner: forestlb::forest::Forest,
}

#[pymethods]
impl PyForest {
    #[new]
    #[pyo3(signature = (root_dims, lo, hi, level = 0))]
    fn new(root_dims: [u32; 3], lo: [f64; 3], hi: [f64; 3], level: u8) -> PyResult<Self> {
        let domain = Aabb::new(lo, hi).map_err(err)?;
        let inner = forestlb::forest::Forest::create(root_dims, domain, level).map_err(err)?;
        Ok(PyForest { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyForest {
            inner: forestlb::forest::Forest::from_text(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn leaves(&self) -> Vec<LeafTuple> {
        self.inner.leaves().iter().map(leaf_tuple).collect()
    }

    fn refine(&mut self, root: [u32; 3], path: Vec<u8>) -> PyResult<()> {
        self.inner.refine_block(&block(root, path)?).map_err(err)
    }

    /// Merge the eight children of the block at `(root, path)`.
    fn coarsen(&mut self, root: [u32; 3], path: Vec<u8>) -> PyResult<()> {
        self.inner.coarsen_siblings(&block(root, path)?).map_err(err)
    }

    /// Refines until 2:1 holds; returns the number of splits.
    fn enforce_two_to_one(&mut self) -> PyResult<usize> {
        self.inner.enforce_two_to_one().map_err(err)
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.inner.check_invariants().map_err(err)
    }

    fn neighbors(&self, root: [u32; 3], path: Vec<u8>) -> PyResult<Vec<(LeafTuple, f64)>> {
        let n = self.inner.neighbors(&block(root, path)?).map_err(err)?;
        Ok(n.iter().map(|x| (leaf_tuple(&x.id), x.area)).collect())
    }

    fn locate(&self, point: [f64; 3]) -> Option<LeafTuple> {
        self.inner.locate(point).as_ref().map(leaf_tuple)
    }

    /// Leaves along the named curve.
    #[pyo3(signature = (curve_name = "hilbert"))]
    fn order(&self, curve_name: &str) -> PyResult<Vec<LeafTuple>> {
        Ok(sfc::order_leaves(&self.inner, curve(curve_name)?).iter().map(leaf_tuple).collect())
    }
}

#[pyfunction]
fn hilbert_index(x: u32, y: u32, z: u32, level: u8) -> PyResult<u128> {
    sfc::hilbert_index(CellCoord::new(x, y, z, level)).map_err(err)
}

#[pyfunction]
fn morton_index(x: u32, y: u32, z: u32, level: u8) -> PyResult<u128> {
    sfc::morton_index(CellCoord::new(x, y, z, level)).map_err(err)
}

/// Rank of each weight under the greedy prefix cut into `p` parts.
#[pyfunction]
fn cut_loads(weights: Vec<u64>, p: u32) -> PyResult<Vec<u32>> {
    forestlb::balance::cut_loads(&weights, p).map_err(err)
}

/// The static box fill on `p` ranks with the load-balancing pipeline.
#[pyclass(name = "StaticRun")]
struct PyStaticRun {
    cfg: ExperimentConfig,
    cluster: Cluster,
    particles: ParticleSet,
}

impl PyStaticRun {
    fn source(&self) -> WeightSource {
        WeightSource::Particles {
            scale: self.cfg.static_scenario.weight_scale,
        }
    }
}

#[pymethods]
impl PyStaticRun {
    /// `config` is TOML text for a static experiment; defaults apply when
    /// it is omitted.
    #[new]
    #[pyo3(signature = (p, config = None))]
    fn new(p: u32, config: Option<&str>) -> PyResult<Self> {
        let text = config.unwrap_or("scenario = \"static\"");
        let mut cfg = validate_config(text).map_err(err)?;
        if cfg.scenario != ScenarioKind::Static {
            return Err(PyValueError::new_err("StaticRun needs scenario = \"static\""));
        }
        cfg.p_sweep = vec![p];
        cfg.validate().map_err(err)?;
        let (forest, particles) = static_setup(&cfg.static_scenario, p).map_err(err)?;
        let source = WeightSource::Particles {
            scale: cfg.static_scenario.weight_scale,
        };
        let a = RankAssignment::id_chunks(&forest, p).map_err(err)?;
        let w = forestlb::balance::assign_weights(&forest, source, &particles);
        let cluster = init_cluster(forest, a, w, p).map_err(err)?;
        Ok(PyStaticRun { cfg, cluster, particles })
    }

    #[getter]
    fn p(&self) -> u32 {
        self.cluster.p
    }

    #[getter]
    fn n_particles(&self) -> usize {
        self.particles.len()
    }

    fn forest(&self) -> PyForest {
        PyForest {
            inner: self.cluster.forest.clone(),
        }
    }

    fn loads(&self) -> Vec<u64> {
        self.cluster.loads()
    }

    fn l_max(&self) -> u64 {
        max_load(&self.cluster.assignment, &self.cluster.weights).l_max
    }

    fn l_avg(&self) -> f64 {
        max_load(&self.cluster.assignment, &self.cluster.weights).l_avg
    }

    /// Mean slowest-rank step time over `window` steps.
    #[pyo3(signature = (window = 1))]
    fn step_time(&mut self, window: u32) -> f64 {
        windowed_step_time(&mut self.cluster, &self.cfg.cost_model, window)
    }

    fn owners(&self) -> Vec<(LeafTuple, u32)> {
        self.cluster.assignment.owner.iter().map(|(id, &r)| (leaf_tuple(id), r)).collect()
    }

    /// Weights, refinement, redistribution with `balancer`, migration.
    fn run_pipeline<'py>(&mut self, py: Python<'py>, balancer: &str) -> PyResult<Bound<'py, PyDict>> {
        let kind: BalancerKind = self.cfg.parse_balancer(balancer).map_err(err)?;
        let state = WeightSourceState {
            source: self.source(),
            particles: &self.particles,
        };
        let r = run_pipeline(&mut self.cluster, kind, self.cfg.threshold_rule(), state, &self.cfg.cost_model).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("balancer", r.balancer.to_string())?;
        d.set_item("leaves_before", r.leaves_before)?;
        d.set_item("leaves_after", r.leaves_after)?;
        d.set_item("refined", r.refined)?;
        d.set_item("coarsened", r.coarsened)?;
        d.set_item("l_max_before", r.l_max_before)?;
        d.set_item("l_max_after", r.l_max_after)?;
        d.set_item("l_avg", r.l_avg)?;
        d.set_item("blocks_moved", r.blocks_moved)?;
        d.set_item("bytes_moved", r.bytes_moved)?;
        d.set_item("msgs", r.msgs)?;
        d.set_item("mem_bytes_max_rank", r.mem_bytes_max_rank)?;
        d.set_item("balancer_work_max_rank", r.balancer_work_max_rank)?;
        d.set_item("t_lbp", r.t_lbp)?;
        Ok(d)
    }
}

/// Run an experiment config (TOML text) and return its CSV output.
#[pyfunction]
fn run_experiment(config: &str) -> PyResult<String> {
    let cfg = validate_config(config).map_err(err)?;
    match cfg.scenario {
        ScenarioKind::Static => Ok(experiment_csv(&run_static_experiment(&cfg).map_err(err)?)),
        ScenarioKind::Hopper => Ok(hopper_csv(&run_hopper_experiment(&cfg).map_err(err)?)),
    }
}

/// Validate a config; returns the balancer names and rank counts it runs.
#[pyfunction]
fn check_config(config: &str) -> PyResult<(Vec<String>, Vec<u32>)> {
    let cfg = validate_config(config).map_err(err)?;
    Ok((cfg.balancers.iter().map(|b| b.to_string()).collect(), cfg.p_sweep))
}

#[pymodule]
fn forestlb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForest>()?;
    m.add_class::<PyStaticRun>()?;
    m.add_function(wrap_pyfunction!(hilbert_index, m)?)?;
    m.add_function(wrap_pyfunction!(morton_index, m)?)?;
    m.add_function(wrap_pyfunction!(cut_loads, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_config, m)?)?;
    Ok(())
}
