//! Trial grids over random graphs, per-trial result rows, and scaling
//! summaries (per-size medians and a log-log slope of queries against `n`).
//!
//! Trials run in parallel, one session per trial, and rows come back in plan
//! order: size, then arm, then trial.

use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{gen_random_graph, DirectedGraph, GraphError, NodeId};
use crate::local::{run_estimator, EstimateError, EstimatorConfig, Mode, OutdegreeBounds};
use crate::oracle::{exact_pagerank_with, ScoreVector, DEFAULT_TOL};
use crate::par::{map_indexed, Execution};
use crate::query::QuerySession;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("no target with n·P(v) in [{lo}, {hi}] on the n = {n} graph")]
    NoTarget { n: usize, lo: f64, hi: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One estimator configuration compared across sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arm {
    pub mode: Mode,
    /// Hand the estimator every node's exact outdegree as its bounds.
    #[serde(default)]
    pub known_outdegrees: bool,
}

impl Arm {
    pub fn label(&self) -> String {
        let m = match self.mode {
            Mode::Direct => "direct",
            Mode::Local => "local",
            Mode::Hybrid => "hybrid",
        };
        if self.known_outdegrees {
            format!("{m}-known")
        } else {
            m.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub avg_outdeg: f64,
    pub max_outdeg: usize,
    pub graph_seed: u64,
    /// Targets are nodes with `n·P(v)` in this band.
    pub target_band: (f64, f64),
    pub arms: Vec<Arm>,
    pub trials: usize,
    pub seed: u64,
    /// Pass the true node count to the estimator instead of estimating it.
    pub n_known: bool,
    /// Base estimator settings; `mode`, `n_known` and `outdeg_bounds` are
    /// set per arm.
    pub estimator: EstimatorConfig,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            sizes: vec![10_000, 30_000, 100_000],
            avg_outdeg: 5.0,
            max_outdeg: 8,
            graph_seed: 3,
            target_band: (1.0, 4.0),
            arms: vec![Arm {
                mode: Mode::Local,
                known_outdegrees: false,
            }],
            trials: 20,
            seed: 1,
            n_known: true,
            estimator: EstimatorConfig {
                alpha: 0.5,
                ..Default::default()
            },
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Plan(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.sizes.is_empty() || self.arms.is_empty() {
            return bad("need at least one size and one arm");
        }
        let (lo, hi) = self.target_band;
        if !(lo >= 0.0 && lo <= hi) {
            return bad("target band needs 0 <= lo <= hi");
        }
        self.estimator.validate()?;
        Ok(())
    }

    /// Session seed of one trial; distinct for every cell and trial.
    pub fn trial_seed(&self, size_idx: usize, arm_idx: usize, trial: usize) -> u64 {
        let cell = ((size_idx as u64) << 48) ^ ((arm_idx as u64) << 32) ^ trial as u64;
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub mode: String,
    pub trial: usize,
    pub node: NodeId,
    pub seed: u64,
    pub queries_total: u64,
    pub random_node: u64,
    pub random_child: u64,
    pub neighbourhood: u64,
    pub estimate: f64,
    pub truth: f64,
    pub rel_err: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub wall_time: f64,
}

struct Instance {
    graph: DirectedGraph,
    truth: ScoreVector,
    targets: Vec<NodeId>,
    exact_bounds: OutdegreeBounds,
}

fn build_instance(plan: &BenchPlan, n: usize, exec: Execution) -> Result<Instance, BenchError> {
    let graph = gen_random_graph(n, plan.avg_outdeg, plan.max_outdeg.min(n), plan.graph_seed)?;
    let truth = exact_pagerank_with(&graph, plan.estimator.alpha, DEFAULT_TOL, exec);
    let (lo, hi) = plan.target_band;
    let mut targets: Vec<NodeId> = graph
        .nodes()
        .filter(|&u| (lo..=hi).contains(&(truth.get(u) * n as f64)))
        .collect();
    if targets.is_empty() {
        return Err(BenchError::NoTarget { n, lo, hi });
    }
    targets.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed ^ n as u64));
    let bounds = graph
        .nodes()
        .map(|u| {
            let d = graph.outdegree(u) as u32;
            (d, d)
        })
        .collect();
    Ok(Instance {
        graph,
        truth,
        targets,
        exact_bounds: OutdegreeBounds::PerNode {
            bounds: Arc::new(bounds),
        },
    })
}

/// Runs the full grid. Rows are in plan order independently of `exec`;
/// only `wall_time` varies between runs.
pub fn run_bench(plan: &BenchPlan, exec: Execution) -> Result<Vec<BenchRow>, BenchError> {
    plan.validate()?;
    let mut rows = Vec::new();
    for (si, &n) in plan.sizes.iter().enumerate() {
        let inst = build_instance(plan, n, exec)?;
        let jobs: Vec<(usize, usize)> = (0..plan.arms.len())
            .flat_map(|a| (0..plan.trials).map(move |t| (a, t)))
            .collect();
        let results = map_indexed(exec, jobs.len(), |j| {
            let (a, t) = jobs[j];
            run_trial(plan, &inst, si, a, t)
        });
        for r in results {
            rows.push(r?);
        }
    }
    Ok(rows)
}

fn run_trial(
    plan: &BenchPlan,
    inst: &Instance,
    size_idx: usize,
    arm_idx: usize,
    trial: usize,
) -> Result<BenchRow, BenchError> {
    let arm = &plan.arms[arm_idx];
    let n = inst.graph.node_count();
    let v = inst.targets[trial % inst.targets.len()];
    let cfg = EstimatorConfig {
        mode: arm.mode,
        n_known: plan.n_known.then_some(n as u64),
        outdeg_bounds: arm.known_outdegrees.then(|| inst.exact_bounds.clone()),
        ..plan.estimator.clone()
    };
    let seed = plan.trial_seed(size_idx, arm_idx, trial);
    let mut session = QuerySession::new(&inst.graph, seed).with_cap(cfg.query_cap);
    let start = Instant::now();
    let art = run_estimator(&mut session, v, &cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let truth = inst.truth.get(v);
    let q = art.estimate.queries;
    Ok(BenchRow {
        n,
        mode: arm.label(),
        trial,
        node: v,
        seed,
        queries_total: q.total,
        random_node: q.random_node,
        random_child: q.random_child,
        neighbourhood: q.neighbourhood,
        estimate: art.estimate.estimate,
        truth,
        rel_err: (art.estimate.estimate / truth - 1.0).abs(),
        epsilon: cfg.epsilon,
        converged: art.estimate.converged,
        wall_time,
    })
}

pub fn write_rows_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<BenchRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<BenchRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub trials: usize,
    pub median_queries: f64,
    pub median_rel_err: f64,
    /// Fraction of trials with `rel_err <= epsilon`.
    pub within_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: String,
    pub cells: Vec<CellSummary>,
    /// Least-squares slope of `ln(median queries)` against `ln n`.
    pub slope: Option<f64>,
}

impl ModeSummary {
    pub fn cell(&self, n: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub modes: Vec<ModeSummary>,
}

impl BenchSummary {
    pub fn mode(&self, label: &str) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == label)
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    })
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Groups rows by mode (first-appearance order) and size (ascending).
pub fn summarize(rows: &[BenchRow]) -> BenchSummary {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.mode.as_str()) {
            labels.push(&r.mode);
        }
    }
    let modes = labels
        .into_iter()
        .map(|label| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.mode == label).collect();
            let mut sizes: Vec<usize> = mine.iter().map(|r| r.n).collect();
            sizes.sort_unstable();
            sizes.dedup();
            let cells: Vec<CellSummary> = sizes
                .into_iter()
                .map(|n| {
                    let cell: Vec<&&BenchRow> = mine.iter().filter(|r| r.n == n).collect();
                    let mut q: Vec<f64> = cell.iter().map(|r| r.queries_total as f64).collect();
                    let mut e: Vec<f64> = cell.iter().map(|r| r.rel_err).collect();
                    let ok = cell.iter().filter(|r| r.rel_err <= r.epsilon).count();
                    CellSummary {
                        n,
                        trials: cell.len(),
                        median_queries: median(&mut q).unwrap_or(f64::NAN),
                        median_rel_err: median(&mut e).unwrap_or(f64::NAN),
                        within_epsilon: ok as f64 / cell.len() as f64,
                    }
                })
                .collect();
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .map(|c| (c.n as f64, c.median_queries))
                .collect();
            ModeSummary {
                mode: label.to_string(),
                slope: loglog_slope(&pts),
                cells,
            }
        })
        .collect();
    BenchSummary { modes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> BenchPlan {
        BenchPlan {
            sizes: vec![300, 600],
            trials: 3,
            arms: vec![
                Arm {
                    mode: Mode::Local,
                    known_outdegrees: false,
                },
                Arm {
                    mode: Mode::Local,
                    known_outdegrees: true,
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(0.6)))
            .collect();
        assert!((loglog_slope(&pts).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn rows_in_plan_order_and_deterministic() {
        let plan = small_plan();
        let a = run_bench(&plan, Execution::Parallel).unwrap();
        let b = run_bench(&plan, Execution::Sequential).unwrap();
        assert_eq!(a.len(), 12);
        let key = |r: &BenchRow| {
            (
                r.n,
                r.mode.clone(),
                r.trial,
                r.node,
                r.queries_total,
                r.estimate.to_bits(),
            )
        };
        assert_eq!(
            a.iter().map(key).collect::<Vec<_>>(),
            b.iter().map(key).collect::<Vec<_>>()
        );
        assert_eq!(a[0].mode, "local");
        assert_eq!(a[3].mode, "local-known");
        assert_eq!(a[6].n, 600);
        let mut seeds: Vec<u64> = a.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 12);
    }

    #[test]
    fn csv_round_trip_preserves_summary() {
        let rows = run_bench(&small_plan(), Execution::auto()).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let back = read_rows_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let s = summarize(&back);
        assert_eq!(s, summarize(&rows));
        assert_eq!(s.modes.len(), 2);
        assert_eq!(s.mode("local").unwrap().cells.len(), 2);
    }

    #[test]
    fn plan_json_defaults() {
        let p: BenchPlan = serde_json::from_str(r#"{"sizes":[100],"trials":2}"#).unwrap();
        assert_eq!(p.max_outdeg, 8);
        assert_eq!(p.estimator.alpha, 0.5);
        assert!(BenchPlan { trials: 0, ..p }.validate().is_err());
    }
}
