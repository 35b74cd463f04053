//! Metered access to a graph through the three natural queries.
//!
//! A [`QuerySession`] owns a `ChaCha8Rng` (rand_chacha 0.9, seeded with
//! `seed_from_u64`), so identical seeds and call sequences reproduce
//! identical outputs and counts on every platform.
//!
//! Local queries (`random_child`, `neighbourhood`) only accept nodes the
//! session has already revealed: input nodes and anything a previous query
//! returned. Asking about any other node is an estimator bug and fails with
//! [`QueryError::Unrevealed`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("node {0} was never revealed to this session")]
    Unrevealed(NodeId),
    #[error("node {id} does not exist (graph has {n} nodes)")]
    UnknownNode { id: NodeId, n: usize },
    #[error("query cap of {0} reached")]
    CapReached(u64),
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub random_node: u64,
    pub random_child: u64,
    pub neighbourhood: u64,
    pub total: u64,
}

impl QueryCounts {
    pub fn new(random_node: u64, random_child: u64, neighbourhood: u64) -> Self {
        Self {
            random_node,
            random_child,
            neighbourhood,
            total: random_node + random_child + neighbourhood,
        }
    }

    /// Queries issued since `earlier` was taken from the same session.
    pub fn since(&self, earlier: &QueryCounts) -> QueryCounts {
        QueryCounts::new(
            self.random_node - earlier.random_node,
            self.random_child - earlier.random_child,
            self.neighbourhood - earlier.neighbourhood,
        )
    }

    pub fn plus(&self, other: &QueryCounts) -> QueryCounts {
        QueryCounts::new(
            self.random_node + other.random_node,
            self.random_child + other.random_child,
            self.neighbourhood + other.neighbourhood,
        )
    }
}

/// Parents and children of one node, as returned by `neighbourhood`.
#[derive(Debug, Clone, Copy)]
pub struct Neighbourhood<'g> {
    pub parents: &'g [NodeId],
    pub children: &'g [NodeId],
}

impl Neighbourhood<'_> {
    pub fn outdegree(&self) -> usize {
        self.children.len()
    }
}

pub struct QuerySession<'g> {
    graph: &'g DirectedGraph,
    rng: ChaCha8Rng,
    counts: QueryCounts,
    revealed: FxHashSet<NodeId>,
    queried: FxHashSet<NodeId>,
    cap: Option<u64>,
}

impl<'g> QuerySession<'g> {
    pub fn new(graph: &'g DirectedGraph, seed: u64) -> Self {
        Self {
            graph,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: QueryCounts::default(),
            revealed: FxHashSet::default(),
            queried: FxHashSet::default(),
            cap: None,
        }
    }

    /// Caps the total number of charged queries.
    pub fn with_cap(mut self, cap: Option<u64>) -> Self {
        self.cap = cap;
        self
    }

    /// Marks an estimator input as known.
    pub fn reveal_input(&mut self, u: NodeId) -> Result<(), QueryError> {
        let n = self.graph.node_count();
        if u as usize >= n {
            return Err(QueryError::UnknownNode { id: u, n });
        }
        self.revealed.insert(u);
        Ok(())
    }

    pub fn counts(&self) -> QueryCounts {
        self.counts
    }

    pub fn cap(&self) -> Option<u64> {
        self.cap
    }

    pub fn is_revealed(&self, u: NodeId) -> bool {
        self.revealed.contains(&u)
    }

    /// Whether `neighbourhood(u)` would be served from cache.
    pub fn is_cached(&self, u: NodeId) -> bool {
        self.queried.contains(&u)
    }

    /// The session RNG, for the estimator's own coin flips.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn charge(&mut self) -> Result<(), QueryError> {
        match self.cap {
            Some(cap) if self.counts.total >= cap => Err(QueryError::CapReached(cap)),
            _ => {
                self.counts.total += 1;
                Ok(())
            }
        }
    }

    fn check_revealed(&self, u: NodeId) -> Result<(), QueryError> {
        let n = self.graph.node_count();
        if u as usize >= n {
            Err(QueryError::UnknownNode { id: u, n })
        } else if !self.revealed.contains(&u) {
            Err(QueryError::Unrevealed(u))
        } else {
            Ok(())
        }
    }

    /// A uniformly random node.
    pub fn random_node(&mut self) -> Result<NodeId, QueryError> {
        let n = self.graph.node_count();
        if n == 0 {
            return Err(QueryError::EmptyGraph);
        }
        self.charge()?;
        self.counts.random_node += 1;
        let u = self.rng.random_range(0..n) as NodeId;
        self.revealed.insert(u);
        Ok(u)
    }

    /// A uniformly random child of `u`, or `None` if `u` is dangling. Both
    /// outcomes are charged.
    pub fn random_child(&mut self, u: NodeId) -> Result<Option<NodeId>, QueryError> {
        self.check_revealed(u)?;
        self.charge()?;
        self.counts.random_child += 1;
        let kids = self.graph.children(u);
        if kids.is_empty() {
            return Ok(None);
        }
        let w = kids[self.rng.random_range(0..kids.len())];
        self.revealed.insert(w);
        Ok(Some(w))
    }

    /// All parents and children of `u`. Only the first call per node is
    /// charged.
    pub fn neighbourhood(&mut self, u: NodeId) -> Result<Neighbourhood<'g>, QueryError> {
        self.check_revealed(u)?;
        if !self.queried.contains(&u) {
            self.charge()?;
            self.counts.neighbourhood += 1;
            self.queried.insert(u);
            let g = self.graph;
            self.revealed.extend(g.parents(u).iter().copied());
            self.revealed.extend(g.children(u).iter().copied());
        }
        Ok(Neighbourhood {
            parents: self.graph.parents(u),
            children: self.graph.children(u),
        })
    }
}
