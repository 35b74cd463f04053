//! Score of `v` from a subgraph around it plus the scores just outside.
//!
//! For a subgraph `Ḡ ∋ v` with no dangling node other than possibly `v`:
//!
//! `P(v) = μ·( Σ_{w∈Ḡ} ℧_{w,v}·((1−α)/n + (α/n)·x_∅)
//!            + Σ_{(u,w) frontier arc} α·P(u)/outdeg(u)·℧_{w,v} )`
//!
//! where `x_∅` is the dangling mass outside `Ḡ` and
//! `μ = 1/(1 − (α/n)·Σ_w ℧_{w,v})` if `v` dangles, else 1.

use rustc_hash::FxHashMap;

use super::conductance::conductance_exact;
use super::{OracleError, ScoreVector};
use crate::graph::{DirectedGraph, NodeId};

/// Coefficients of the decomposition, independent of any scores.
#[derive(Debug, Clone)]
pub struct SubgraphDecomposition {
    pub mu: f64,
    /// `μ·(1−α)/n·Σ_w ℧_{w,v}`.
    pub c_graph: f64,
    /// `u → μ·α·Σ_{(u,w) frontier arc} ℧_{w,v}` for every frontier node.
    pub c_frontier: FxHashMap<NodeId, f64>,
    pub cond_sum: f64,
}

impl SubgraphDecomposition {
    /// Evaluates the decomposition at the given scores.
    pub fn evaluate(&self, graph: &DirectedGraph, v: NodeId, alpha: f64, scores: &[f64]) -> f64 {
        let x_empty: f64 = graph
            .nodes()
            .filter(|&u| u != v && graph.is_dangling(u))
            .map(|u| scores[u as usize])
            .sum();
        let frontier: f64 = self
            .c_frontier
            .iter()
            .map(|(&u, &c)| c * scores[u as usize] / graph.outdegree(u) as f64)
            .sum();
        self.c_graph * (1.0 + alpha / (1.0 - alpha) * x_empty) + frontier
    }
}

pub fn subgraph_decomposition(
    graph: &DirectedGraph,
    members: &[NodeId],
    v: NodeId,
    alpha: f64,
    n_used: f64,
) -> Result<SubgraphDecomposition, OracleError> {
    for &w in members {
        if w != v && (w as usize) < graph.node_count() && graph.is_dangling(w) {
            return Err(OracleError::DanglingInSubgraph(w));
        }
    }
    let cond = conductance_exact(graph, members, v, alpha)?;
    let cond_sum: f64 = cond.values.values().sum();
    let mu = if graph.is_dangling(v) {
        1.0 / (1.0 - alpha / n_used * cond_sum)
    } else {
        1.0
    };
    let mut c_frontier: FxHashMap<NodeId, f64> = FxHashMap::default();
    for (&w, &x) in &cond.values {
        for &u in graph.parents(w) {
            if !cond.values.contains_key(&u) {
                *c_frontier.entry(u).or_insert(0.0) += mu * alpha * x;
            }
        }
    }
    Ok(SubgraphDecomposition {
        mu,
        c_graph: mu * (1.0 - alpha) / n_used * cond_sum,
        c_frontier,
        cond_sum,
    })
}

pub fn decomposition_score(
    graph: &DirectedGraph,
    members: &[NodeId],
    v: NodeId,
    exact: &ScoreVector,
) -> Result<f64, OracleError> {
    let n = graph.node_count() as f64;
    let d = subgraph_decomposition(graph, members, v, exact.alpha, n)?;
    Ok(d.evaluate(graph, v, exact.alpha, &exact.scores))
}
