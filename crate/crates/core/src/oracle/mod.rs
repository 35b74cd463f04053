//! Ground-truth computations with full graph access.

mod conductance;
mod decomposition;
mod pagerank;
mod pathsum;
mod sample_size;

pub use conductance::{conductance_bruteforce, conductance_exact, ConductanceTable};
pub use decomposition::{decomposition_score, subgraph_decomposition, SubgraphDecomposition};
pub use pagerank::{exact_pagerank, exact_pagerank_with, ScoreVector, DEFAULT_TOL};
pub use pathsum::{pathsum_pagerank, PathSum};
pub use sample_size::{av_sample_size, hit_target};

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("enumeration budget of {0} steps exceeded")]
    BudgetExceeded(u64),
    #[error("node {0} is not in the subgraph")]
    NotInSubgraph(NodeId),
    #[error("subgraph contains dangling node {0} other than the target")]
    DanglingInSubgraph(NodeId),
    #[error("node {0} out of range")]
    UnknownNode(NodeId),
    #[error("linear system is singular")]
    Singular,
}
