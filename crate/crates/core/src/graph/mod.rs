//! Immutable directed graphs, edge-list I/O and generators.

mod family;
mod io;
mod random;

pub use family::{
    closed_form_scores, gen_lower_bound_family, ClosedFormScores, FamilyLayout, LabeledGraph,
    LowerBoundFamilySpec, NodeRole, Regime,
};
pub use io::{load_edge_list, read_edge_list_file, write_edge_list, ParseError};
pub use random::gen_random_graph;

use thiserror::Error;

/// Dense node identifier in `0..n`.
pub type NodeId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node id {id} out of range for {n} nodes")]
    NodeOutOfRange { id: u64, n: usize },
    #[error("duplicate arc {0} -> {1}")]
    DuplicateArc(NodeId, NodeId),
    #[error("node count {0} exceeds the id space")]
    TooManyNodes(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Directed graph in compressed sparse row form, with both the out-lists and
/// the in-lists materialised. Adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
}

impl DirectedGraph {
    /// Builds a simple graph (self-loops allowed, parallel arcs rejected).
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if n > NodeId::MAX as usize {
            return Err(GraphError::TooManyNodes(n));
        }
        let mut arcs: Vec<(NodeId, NodeId)> = arcs.into_iter().collect();
        for &(u, w) in &arcs {
            for id in [u, w] {
                if id as usize >= n {
                    return Err(GraphError::NodeOutOfRange { id: id as u64, n });
                }
            }
        }
        arcs.sort_unstable();
        if let Some(w) = arcs.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateArc(w[0].0, w[0].1));
        }
        Ok(Self::from_sorted_unique(n, &arcs))
    }

    fn from_sorted_unique(n: usize, arcs: &[(NodeId, NodeId)]) -> Self {
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, w) in arcs {
            out_offsets[u as usize + 1] += 1;
            in_offsets[w as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets: Vec<NodeId> = arcs.iter().map(|&(_, w)| w).collect();
        let mut in_sources = vec![0 as NodeId; arcs.len()];
        let mut cursor = in_offsets.clone();
        // arcs are sorted by source, so every in-list comes out sorted
        for &(u, w) in arcs {
            let slot = &mut cursor[w as usize];
            in_sources[*slot] = u;
            *slot += 1;
        }
        Self {
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, &[])
    }

    pub fn node_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.out_targets[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    pub fn parents(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.in_sources[self.in_offsets[u]..self.in_offsets[u + 1]]
    }

    pub fn outdegree(&self, u: NodeId) -> usize {
        let u = u as usize;
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    pub fn indegree(&self, u: NodeId) -> usize {
        let u = u as usize;
        self.in_offsets[u + 1] - self.in_offsets[u]
    }

    pub fn is_dangling(&self, u: NodeId) -> bool {
        self.outdegree(u) == 0
    }

    pub fn has_arc(&self, u: NodeId, w: NodeId) -> bool {
        self.children(u).binary_search(&w).is_ok()
    }

    pub fn max_outdegree(&self) -> usize {
        (0..self.node_count() as NodeId)
            .map(|u| self.outdegree(u))
            .max()
            .unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.node_count() as NodeId
    }

    /// All arcs in (source, target) lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.children(u).iter().map(move |&w| (u, w)))
    }

    /// Renames node `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[NodeId]) -> Self {
        assert_eq!(perm.len(), self.node_count());
        let mut arcs: Vec<(NodeId, NodeId)> = self
            .arcs()
            .map(|(u, w)| (perm[u as usize], perm[w as usize]))
            .collect();
        arcs.sort_unstable();
        Self::from_sorted_unique(self.node_count(), &arcs)
    }

    /// Checks the out/in cross-reference invariant exhaustively.
    pub fn check_adjacency(&self) -> Result<(), String> {
        let n = self.node_count();
        if self.out_targets.len() != self.in_sources.len() {
            return Err("out-degree and in-degree totals differ".into());
        }
        for u in self.nodes() {
            let kids = self.children(u);
            if kids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("children of {u} not strictly sorted"));
            }
            for &w in kids {
                if w as usize >= n {
                    return Err(format!("arc {u}->{w} leaves the id range"));
                }
                if self.parents(w).binary_search(&u).is_err() {
                    return Err(format!("arc {u}->{w} missing from in-list of {w}"));
                }
            }
            for &p in self.parents(u) {
                if !self.has_arc(p, u) {
                    return Err(format!("in-list of {u} names {p} without arc"));
                }
            }
        }
        Ok(())
    }
}
