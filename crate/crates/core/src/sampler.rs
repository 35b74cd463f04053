//! PageRank-proportional node sampling and the estimators built on it.
//!
//! [`sample_node`] returns each node with probability exactly its PageRank
//! score: start at a uniform node, then repeatedly stop with probability
//! `1−α` or move to a uniform child (jumping uniformly again from a dangling
//! node). Each call costs fewer than `2/(1−α)` queries in expectation.

use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::oracle::hit_target;
use crate::query::{QueryCounts, QueryError, QuerySession};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Local,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEstimate {
    pub node: NodeId,
    pub estimate: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub method: Method,
    pub queries: QueryCounts,
    pub converged: bool,
}

/// How a walk step reaches a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChildAccess {
    #[default]
    RandomChild,
    /// Fetch (cached) parents and children and pick a child locally.
    Neighbourhood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub node: NodeId,
    /// Output of the walk's initial `random_node`.
    pub first_jump: NodeId,
    pub queries: u64,
}

pub fn sample_node(session: &mut QuerySession<'_>, alpha: f64) -> Result<Draw, QueryError> {
    sample_node_via(session, alpha, ChildAccess::RandomChild)
}

pub fn sample_node_via(
    session: &mut QuerySession<'_>,
    alpha: f64,
    access: ChildAccess,
) -> Result<Draw, QueryError> {
    let before = session.counts().total;
    let first_jump = session.random_node()?;
    let mut current = first_jump;
    loop {
        if session.rng().random::<f64>() >= alpha {
            return Ok(Draw {
                node: current,
                first_jump,
                queries: session.counts().total - before,
            });
        }
        let child = match access {
            ChildAccess::RandomChild => session.random_child(current)?,
            ChildAccess::Neighbourhood => {
                let kids = session.neighbourhood(current)?.children;
                if kids.is_empty() {
                    None
                } else {
                    Some(kids[session.rng().random_range(0..kids.len())])
                }
            }
        };
        current = match child {
            Some(w) => w,
            None => session.random_node()?,
        };
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBatch {
    pub draws: Vec<NodeId>,
    pub per_draw_queries: Vec<u64>,
    pub first_jumps: Vec<NodeId>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn push(&mut self, d: Draw) {
        self.draws.push(d.node);
        self.per_draw_queries.push(d.queries);
        self.first_jumps.push(d.first_jump);
    }

    /// Appends `count` draws. On error the draws made so far are kept.
    pub fn extend(
        &mut self,
        session: &mut QuerySession<'_>,
        alpha: f64,
        count: usize,
    ) -> Result<(), QueryError> {
        for _ in 0..count {
            self.push(sample_node(session, alpha)?);
        }
        Ok(())
    }

    pub fn collect(
        session: &mut QuerySession<'_>,
        alpha: f64,
        count: usize,
    ) -> Result<Self, QueryError> {
        let mut b = Self::default();
        b.extend(session, alpha, count)?;
        Ok(b)
    }
}

/// Incremental direct estimator: sample until the target is hit `H` times.
#[derive(Debug, Clone)]
pub struct DirectEstimator {
    pub v: NodeId,
    pub target_hits: u64,
    pub hits: u64,
    pub draws: u64,
}

impl DirectEstimator {
    pub fn new(v: NodeId, epsilon: f64, delta: f64) -> Self {
        Self {
            v,
            target_hits: hit_target(epsilon, delta),
            hits: 0,
            draws: 0,
        }
    }

    pub fn done(&self) -> bool {
        self.hits >= self.target_hits
    }

    pub fn estimate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.hits as f64 / self.draws as f64
        }
    }

    pub fn step(&mut self, session: &mut QuerySession<'_>, alpha: f64) -> Result<Draw, QueryError> {
        let d = sample_node(session, alpha)?;
        self.draws += 1;
        if d.node == self.v {
            self.hits += 1;
        }
        Ok(d)
    }
}

/// Direct estimate `hits/draws`, stopping after `⌈3·ln(2/δ)/ε²⌉` hits. A
/// query cap ends the run early with `converged = false`.
pub fn estimate_score_direct(
    session: &mut QuerySession<'_>,
    v: NodeId,
    alpha: f64,
    epsilon: f64,
    delta: f64,
) -> Result<ScoreEstimate, QueryError> {
    session.reveal_input(v)?;
    let start = session.counts();
    let mut est = DirectEstimator::new(v, epsilon, delta);
    let mut converged = true;
    while !est.done() {
        match est.step(session, alpha) {
            Ok(_) => {}
            Err(QueryError::CapReached(_)) => {
                converged = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ScoreEstimate {
        node: v,
        estimate: est.estimate(),
        epsilon,
        delta,
        method: Method::Direct,
        queries: session.counts().since(&start),
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub n_hat: u64,
    pub samples_used: u64,
    pub collisions: u64,
}

/// Pairwise collision counter over a stream of uniform node ids.
#[derive(Debug, Clone, Default)]
pub struct CollisionCounter {
    seen: FxHashMap<NodeId, u64>,
    pub samples: u64,
    pub collisions: u64,
}

impl CollisionCounter {
    pub fn observe(&mut self, u: NodeId) {
        let c = self.seen.entry(u).or_insert(0);
        self.collisions += *c;
        *c += 1;
        self.samples += 1;
    }

    /// `⌊k(k−1)/(2C)⌋`, or `None` before the first collision.
    pub fn estimate(&self) -> Option<SizeEstimate> {
        if self.collisions == 0 {
            return None;
        }
        let k = self.samples;
        let n_hat = (k * (k - 1) / 2) / self.collisions;
        Some(SizeEstimate {
            n_hat: n_hat.max(1),
            samples_used: k,
            collisions: self.collisions,
        })
    }
}

/// Birthday estimate of the node count from uniform draws.
pub fn estimate_size(
    session: &mut QuerySession<'_>,
    target_collisions: u64,
) -> Result<SizeEstimate, QueryError> {
    assert!(
        target_collisions >= 1,
        "target_collisions must be at least 1"
    );
    let mut c = CollisionCounter::default();
    while c.collisions < target_collisions {
        c.observe(session.random_node()?);
    }
    Ok(c.estimate().expect("at least one collision"))
}

/// Fraction of draws that are dangling and not `v`. Outdegrees come from
/// one cached `neighbourhood` per distinct drawn node.
pub fn estimate_dangling_mass(
    batch: &SampleBatch,
    session: &mut QuerySession<'_>,
    v: NodeId,
) -> Result<f64, QueryError> {
    assert!(!batch.is_empty(), "batch must be nonempty");
    let mut dangling: FxHashSet<NodeId> = FxHashSet::default();
    let mut hits = 0u64;
    for &u in &batch.draws {
        if u == v {
            continue;
        }
        if dangling.contains(&u) || session.neighbourhood(u)?.children.is_empty() {
            dangling.insert(u);
            hits += 1;
        }
    }
    Ok(hits as f64 / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;

    #[test]
    fn self_loop_always_returned() {
        let g = DirectedGraph::from_arcs(1, [(0, 0)]).unwrap();
        let mut s = QuerySession::new(&g, 3);
        for _ in 0..100 {
            assert_eq!(sample_node(&mut s, 0.85).unwrap().node, 0);
        }
    }

    #[test]
    fn per_draw_queries_add_up() {
        let g = crate::graph::gen_random_graph(200, 3.0, 6, 1).unwrap();
        let mut s = QuerySession::new(&g, 3);
        let b = SampleBatch::collect(&mut s, 0.85, 500).unwrap();
        assert_eq!(b.per_draw_queries.iter().sum::<u64>(), s.counts().total);
        assert!(b.per_draw_queries.iter().all(|&q| q >= 1));
        assert_eq!(b.first_jumps.len(), 500);
    }

    #[test]
    fn single_node_direct_is_exact() {
        let g = DirectedGraph::empty(1);
        let mut s = QuerySession::new(&g, 3);
        let e = estimate_score_direct(&mut s, 0, 0.5, 0.1, 0.1).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert!(e.converged);
        assert_eq!(
            e.queries.random_node,
            e.queries.total - e.queries.random_child
        );
    }

    #[test]
    fn direct_cap_marks_unconverged() {
        let g = DirectedGraph::empty(1000);
        let mut s = QuerySession::new(&g, 3).with_cap(Some(10));
        let e = estimate_score_direct(&mut s, 5, 0.5, 0.1, 0.1).unwrap();
        assert!(!e.converged);
        assert_eq!(e.queries.total, 10);
    }

    #[test]
    fn size_of_single_node() {
        let g = DirectedGraph::empty(1);
        let mut s = QuerySession::new(&g, 3);
        let e = estimate_size(&mut s, 1).unwrap();
        assert_eq!(
            e,
            SizeEstimate {
                n_hat: 1,
                samples_used: 2,
                collisions: 1
            }
        );
    }

    #[test]
    fn no_dangling_means_zero_mass() {
        let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut s = QuerySession::new(&g, 3);
        let b = SampleBatch::collect(&mut s, 0.5, 100).unwrap();
        assert_eq!(estimate_dangling_mass(&b, &mut s, 0).unwrap(), 0.0);
    }

    #[test]
    fn dangling_target_excluded() {
        let g = DirectedGraph::from_arcs(2, [(1, 0)]).unwrap();
        let mut s = QuerySession::new(&g, 3);
        s.reveal_input(0).unwrap();
        let b = SampleBatch::collect(&mut s, 0.5, 200).unwrap();
        assert_eq!(estimate_dangling_mass(&b, &mut s, 0).unwrap(), 0.0);
    }
}
