//! Local PageRank estimation with sublinear query cost.
//!
//! Estimators in this crate never touch a [`DirectedGraph`] directly. They
//! run against a [`QuerySession`], which exposes only the three natural
//! queries (`random_node`, `random_child`, `neighbourhood`) and meters every
//! call. Exact oracles in [`oracle`] and the recomputation suites in
//! [`verify`] have full graph access and exist to check the estimators.
//!
//! Module map:
//!
//! - [`graph`]: immutable graph storage, edge-list I/O, random graphs and the
//!   two-level lower-bound families with closed-form scores.
//! - [`query`]: the metered query session.
//! - [`oracle`]: power iteration, path-sum series, brute-force conductance,
//!   the subgraph decomposition identity and sample-size calculators.
//! - [`sampler`]: PageRank-proportional node sampling and the estimators
//!   built directly on it (direct score, graph size, dangling mass).
//! - [`local`]: frontier expansion with balanced coefficients, outdegree
//!   guessing, the local and hybrid estimators.
//! - [`verify`]: from-scratch recomputation suites used by tests and the CLI.
//! - [`bench`]: trial grids, per-trial rows and log-log scaling summaries.

pub mod bench;
pub mod graph;
pub mod local;
pub mod oracle;
pub mod par;
pub mod query;
pub mod sampler;
pub mod verify;

mod util;

pub use graph::{DirectedGraph, GraphError, NodeId};
pub use local::{EstimatorConfig, Mode, RunArtifact};
pub use query::{QueryCounts, QueryError, QuerySession};
pub use sampler::{Method, ScoreEstimate};
