//! Conductances `℧_{w,v}` inside an induced subgraph.
//!
//! `℧_{w,v} = Σ_paths ∏ α/outdeg_G(x)` over paths from `w` to `v` that stay
//! inside the subgraph, with outdegrees taken in the full graph. The empty
//! path contributes 1 to `℧_{v,v}`.

use nalgebra::{DMatrix, DVector};
use rustc_hash::FxHashMap;

use super::OracleError;
use crate::graph::{DirectedGraph, NodeId};

const LAYER_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceTable {
    pub values: FxHashMap<NodeId, f64>,
    /// Bound on the mass of paths longer than the enumeration limit.
    pub tail: f64,
}

impl ConductanceTable {
    pub fn get(&self, w: NodeId) -> f64 {
        self.values.get(&w).copied().unwrap_or(0.0)
    }
}

fn index_members(
    g: &DirectedGraph,
    members: &[NodeId],
    v: NodeId,
) -> Result<FxHashMap<NodeId, usize>, OracleError> {
    let mut index = FxHashMap::default();
    for &w in members {
        if w as usize >= g.node_count() {
            return Err(OracleError::UnknownNode(w));
        }
        let next = index.len();
        index.entry(w).or_insert(next);
    }
    if !index.contains_key(&v) {
        return Err(OracleError::NotInSubgraph(v));
    }
    Ok(index)
}

/// Truncated path sums up to `max_len` arcs, grouped by path length: layer
/// `τ` holds, for each start node, the weight of all length-`τ` internal
/// paths to `v`. The reported tail is `α^{max_len+1}·|Ḡ|/(1−α)`.
pub fn conductance_bruteforce(
    graph: &DirectedGraph,
    members: &[NodeId],
    v: NodeId,
    alpha: f64,
    max_len: usize,
) -> Result<ConductanceTable, OracleError> {
    let index = index_members(graph, members, v)?;
    let k = index.len();
    let mut order = vec![0 as NodeId; k];
    for (&w, &i) in &index {
        order[i] = w;
    }
    let mut layer = vec![0.0; k];
    layer[index[&v]] = 1.0;
    let mut total = layer.clone();
    let mut budget = LAYER_BUDGET;
    for _ in 0..max_len {
        let mut next = vec![0.0; k];
        for (i, &y) in order.iter().enumerate() {
            if layer[i] == 0.0 {
                continue;
            }
            for &p in graph.parents(y) {
                if budget == 0 {
                    return Err(OracleError::BudgetExceeded(LAYER_BUDGET));
                }
                budget -= 1;
                if let Some(&j) = index.get(&p) {
                    next[j] += layer[i] * alpha / graph.outdegree(p) as f64;
                }
            }
        }
        for (t, x) in total.iter_mut().zip(&next) {
            *t += x;
        }
        layer = next;
    }
    Ok(ConductanceTable {
        values: order.iter().zip(total).map(|(&w, x)| (w, x)).collect(),
        tail: alpha.powi(max_len as i32 + 1) * k as f64 / (1.0 - alpha),
    })
}

/// Exact conductances via a dense LU solve of `(I − A)·x = e_v`.
pub fn conductance_exact(
    graph: &DirectedGraph,
    members: &[NodeId],
    v: NodeId,
    alpha: f64,
) -> Result<ConductanceTable, OracleError> {
    let index = index_members(graph, members, v)?;
    let k = index.len();
    let mut m = DMatrix::<f64>::identity(k, k);
    for (&w, &i) in &index {
        let d = graph.outdegree(w) as f64;
        for &x in graph.children(w) {
            if let Some(&j) = index.get(&x) {
                m[(i, j)] -= alpha / d;
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[index[&v]] = 1.0;
    let x = m.lu().solve(&rhs).ok_or(OracleError::Singular)?;
    Ok(ConductanceTable {
        values: index.iter().map(|(&w, &i)| (w, x[i])).collect(),
        tail: 0.0,
    })
}
