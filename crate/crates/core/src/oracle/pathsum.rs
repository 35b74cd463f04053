//! PageRank as a sum over paths, by explicit enumeration.
//!
//! Without dangling nodes, `P(v) = (1−α)/n · Σ_paths α^τ ∏ 1/outdeg(w_i)`
//! over all paths ending at `v`. Dangling nodes feed their mass back through
//! the uniform jump, which rescales the whole series: with
//! `T(x) = Σ_paths α^τ ∏ 1/outdeg` and `T_D = (1/n)·Σ_{dangling d} T(d)`,
//! `P(v) = (1−α)/n · T(v) / (1 − α·T_D)`.

use serde::Serialize;

use super::OracleError;
use crate::graph::{DirectedGraph, NodeId};

const PATH_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSum {
    pub lower: f64,
    /// Upper bound on the mass omitted by truncation.
    pub gap: f64,
}

/// Sum of `α^τ ∏ 1/outdeg` over paths of length `≤ max_len` ending at `x`.
/// With `skip_self`, paths that pass through `x` before the end are dropped.
fn backward_paths(
    g: &DirectedGraph,
    alpha: f64,
    x: NodeId,
    max_len: usize,
    skip_self: bool,
    budget: &mut u64,
) -> Result<f64, OracleError> {
    // explicit stack of (node, length, weight)
    let mut stack = vec![(x, 0usize, 1.0f64)];
    let mut total = 0.0;
    while let Some((y, len, w)) = stack.pop() {
        if *budget == 0 {
            return Err(OracleError::BudgetExceeded(PATH_BUDGET));
        }
        *budget -= 1;
        total += w;
        if len == max_len {
            continue;
        }
        for &p in g.parents(y) {
            if skip_self && p == x {
                continue;
            }
            stack.push((p, len + 1, w * alpha / g.outdegree(p) as f64));
        }
    }
    Ok(total)
}

/// The only arc out of `v` is a self-loop.
fn only_self_loop(g: &DirectedGraph, v: NodeId) -> bool {
    g.children(v) == [v]
}

pub fn pathsum_pagerank(
    graph: &DirectedGraph,
    alpha: f64,
    v: NodeId,
    max_len: usize,
) -> Result<PathSum, OracleError> {
    let n = graph.node_count();
    if v as usize >= n {
        return Err(OracleError::UnknownNode(v));
    }
    let mut budget = PATH_BUDGET;
    // a node whose only arc is a self-loop: enumerate the loop-free paths and
    // multiply by 1/(1−α), which sums every number of trips around the loop
    let simplify = only_self_loop(graph, v);
    let loop_factor = if simplify { 1.0 / (1.0 - alpha) } else { 1.0 };
    let t_v = loop_factor * backward_paths(graph, alpha, v, max_len, simplify, &mut budget)?;

    let dangling: Vec<NodeId> = graph.nodes().filter(|&u| graph.is_dangling(u)).collect();
    let mut t_d = 0.0;
    for &d in &dangling {
        t_d += backward_paths(graph, alpha, d, max_len, false, &mut budget)?;
    }
    let nf = n as f64;
    t_d /= nf;

    let c = (1.0 - alpha) / nf;
    let rho = alpha.powi(max_len as i32 + 1) / (1.0 - alpha);
    let lower = c * t_v / (1.0 - alpha * t_d);
    // each truncated T(x) misses at most n·ρ (per-start walk mass ≤ α^τ)
    let denom_hi = 1.0 - alpha * (t_d + dangling.len() as f64 * rho);
    let upper = if denom_hi > 0.0 {
        c * (t_v + loop_factor * nf * rho) / denom_hi
    } else {
        f64::INFINITY
    };
    Ok(PathSum {
        lower,
        gap: (upper - lower).max(rho),
    })
}
