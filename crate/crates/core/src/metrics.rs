//! Evaluation metrics and their CSV serialization.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::balance::{RankAssignment, WeightMap};
use crate::error::{Error, Result};

/// Default averaging window in steps.
pub const DEFAULT_WINDOW: u32 = 100;

/// Frozen column order of the experiment CSV.
pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "balancer",
    "p",
    "leaves",
    "l_max_before",
    "l_max_after",
    "l_avg",
    "eta",
    "t_lbp",
    "blocks_moved",
    "msgs",
    "mem_bytes_max_rank",
    "balancer_work_max_rank",
];

pub const HOPPER_CSV_HEADER: [&str; 10] =
    ["balancer", "step", "contacts", "leaves", "l_max", "l_avg", "max_leaf", "step_time", "blocks_moved", "in_tank"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSummary {
    pub l_max: u64,
    pub l_avg: f64,
    pub loads: Vec<u64>,
}

/// Per-rank sums of computational weight; empty ranks count as zero.
pub fn max_load(a: &RankAssignment, w: &WeightMap) -> LoadSummary {
    let loads = a.loads(w);
    LoadSummary {
        l_max: loads.iter().copied().max().unwrap_or(0),
        l_avg: w.total() as f64 / a.p.max(1) as f64,
        loads,
    }
}

/// `l_max / l_avg`; 1 for a perfect balance, 0 for no load at all.
pub fn imbalance(s: &LoadSummary) -> f64 {
    if s.l_avg > 0.0 {
        s.l_max as f64 / s.l_avg
    } else {
        0.0
    }
}

pub fn performance_gain(t_before: f64, t_after: f64) -> Result<f64> {
    if !(t_before > 0.0 && t_after > 0.0) {
        return Err(Error::Domain(format!("step times must be positive, got {t_before} and {t_after}")));
    }
    Ok(t_before / t_after)
}

/// Mean of the last `window` entries of `series` (all of it if shorter).
pub fn window_mean(series: &[f64], window: usize) -> f64 {
    let tail = &series[series.len().saturating_sub(window.max(1))..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub l_max: u64,
    pub l_avg: f64,
    pub eta: f64,
    pub t_lbp: f64,
    pub t_step_before: f64,
    pub t_step_after: f64,
}

/// One (scenario, balancer, p) result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub scenario: String,
    pub balancer: String,
    pub p: u32,
    pub leaves: usize,
    pub l_max_before: u64,
    pub l_max_after: u64,
    pub l_avg: f64,
    pub eta: f64,
    pub t_lbp: f64,
    pub blocks_moved: u64,
    pub msgs: u64,
    pub mem_bytes_max_rank: u64,
    pub balancer_work_max_rank: u64,
}

/// One rebalance interval of a hopper run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopperRow {
    pub balancer: String,
    pub step: u64,
    pub contacts: u64,
    pub leaves: usize,
    pub l_max: u64,
    pub l_avg: f64,
    /// Heaviest single leaf, the granularity bound on balance.
    pub max_leaf: f64,
    pub step_time: f64,
    pub blocks_moved: u64,
    pub in_tank: usize,
}

/// A point of a named (x, y) series for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn to_string<R: Serialize>(header: &[&str], rows: &[R]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, header, rows).expect("writing CSV to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn experiment_csv(rows: &[ExperimentRow]) -> String {
    to_string(&CSV_HEADER, rows)
}

pub fn hopper_csv(rows: &[HopperRow]) -> String {
    to_string(&HOPPER_CSV_HEADER, rows)
}

pub fn plot_csv(points: &[PlotPoint]) -> String {
    to_string(&["series", "x", "y"], points)
}

pub fn report_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    write_file(path, &experiment_csv(rows))
}

pub fn report_hopper_csv(rows: &[HopperRow], path: &Path) -> Result<()> {
    write_file(path, &hopper_csv(rows))
}

pub fn report_plot_data(points: &[PlotPoint], path: &Path) -> Result<()> {
    write_file(path, &plot_csv(points))
}

/// Gain-vs-p and work-vs-p series, one per balancer.
pub fn plot_points(rows: &[ExperimentRow]) -> Vec<PlotPoint> {
    let mut out = Vec::with_capacity(2 * rows.len());
    for r in rows {
        out.push(PlotPoint {
            series: format!("eta/{}/{}", r.scenario, r.balancer),
            x: r.p as f64,
            y: r.eta,
        });
    }
    for r in rows {
        out.push(PlotPoint {
            series: format!("work/{}/{}", r.scenario, r.balancer),
            x: r.p as f64,
            y: r.balancer_work_max_rank as f64,
        });
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    cov / var
}
