//! Local estimation by frontier expansion, and the hybrid driver.
//!
//! The local estimator grows a subgraph around the target `v` by crossing
//! frontier nodes, then corrects the deterministic part of the estimate with
//! a batch of PageRank-proportional samples: `p̂ = q̂ + ŝ`. See
//! [`FrontierState`] for the expansion itself.

mod frontier;
mod guess;
mod hybrid;
mod pipeline;

pub use frontier::{FrontierNode, FrontierState, DEFAULT_COND_TOL};
pub use guess::{guess_outdegrees, GuessTable};
pub use hybrid::estimate_score_hybrid;
pub use pipeline::{assemble_estimate, estimate_score_local, Assembly, LocalRun};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::query::{QueryCounts, QueryError, QuerySession};
use crate::sampler::{estimate_score_direct, ScoreEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Direct,
    #[default]
    Local,
    Hybrid,
}

/// Side information on outdegrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutdegreeBounds {
    /// Every node has outdegree in `[min, max]`.
    Uniform { min: u32, max: u32 },
    /// Per-node `(min, max)`, indexed by node id.
    PerNode { bounds: Arc<Vec<(u32, u32)>> },
}

impl OutdegreeBounds {
    /// Lower bound for `u`, floored at 1 (frontier nodes are never dangling).
    pub fn min_of(&self, u: NodeId) -> f64 {
        let m = match self {
            OutdegreeBounds::Uniform { min, .. } => *min,
            OutdegreeBounds::PerNode { bounds } => bounds.get(u as usize).map_or(1, |b| b.0),
        };
        m.max(1) as f64
    }

    /// Largest `max/min` ratio over all nodes.
    pub fn max_ratio(&self) -> f64 {
        let ratio = |lo: u32, hi: u32| hi.max(1) as f64 / lo.max(1) as f64;
        match self {
            OutdegreeBounds::Uniform { min, max } => ratio(*min, *max),
            OutdegreeBounds::PerNode { bounds } => bounds
                .iter()
                .map(|&(lo, hi)| ratio(lo, hi))
                .fold(1.0, f64::max),
        }
    }
}

/// Multipliers `γ_u` used to balance the coefficients.
#[derive(Debug, Clone)]
pub enum GammaSource {
    Guess(GuessTable),
    Bounds(OutdegreeBounds),
}

impl GammaSource {
    pub fn gamma(&self, u: NodeId) -> f64 {
        match self {
            GammaSource::Guess(t) => t.guess(u),
            GammaSource::Bounds(b) => b.min_of(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    pub n_known: Option<u64>,
    pub outdeg_bounds: Option<OutdegreeBounds>,
    /// Constant in the expansion and sampling budget `m = n̄`.
    pub c_budget: f64,
    /// Constant in the outdegree guess floor.
    pub c_guess: f64,
    pub query_cap: Option<u64>,
    /// Collisions required by the birthday size estimate.
    pub target_collisions: u64,
    /// Hybrid mode switches to local once `P(v) < crossover_factor·n̂^{−2/3}`
    /// is certified.
    pub crossover_factor: f64,
    /// Direct-sampling queries the hybrid driver spends per local query after
    /// switching.
    pub hybrid_direct_rate: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            epsilon: 0.2,
            delta: 0.1,
            mode: Mode::Local,
            n_known: None,
            outdeg_bounds: None,
            c_budget: 1.0,
            c_guess: 1.0,
            query_cap: None,
            target_collisions: 64,
            crossover_factor: 4.0,
            hybrid_direct_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: &str| Err(EstimateError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0,1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0,1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0,1)");
        }
        if !(self.c_budget > 0.0 && self.c_guess > 0.0 && self.crossover_factor > 0.0) {
            return bad("constants must be positive");
        }
        if self.hybrid_direct_rate.is_nan() || self.hybrid_direct_rate <= 0.0 {
            return bad("hybrid_direct_rate must be positive");
        }
        if self.target_collisions == 0 {
            return bad("target_collisions must be at least 1");
        }
        if self.n_known == Some(0) {
            return bad("n_known must be positive");
        }
        if let Some(OutdegreeBounds::Uniform { min, max }) = &self.outdeg_bounds {
            if min > max {
                return bad("outdegree bounds need min <= max");
            }
        }
        Ok(())
    }

    /// `m = n̄` for a graph of (estimated) size `n`.
    pub fn budget(&self, n: f64) -> u64 {
        let m = match &self.outdeg_bounds {
            Some(b) => self.c_budget * (n * b.max_ratio()).sqrt(),
            None => self.c_budget * n.powf(2.0 / 3.0) * n.max(2.0).ln().cbrt(),
        };
        (m.ceil() as u64).max(1)
    }
}

/// Queries spent in each stage of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseQueries {
    pub size: QueryCounts,
    pub guess: QueryCounts,
    pub expand: QueryCounts,
    pub sample: QueryCounts,
    pub assemble: QueryCounts,
    pub direct: QueryCounts,
}

impl PhaseQueries {
    pub fn total(&self) -> QueryCounts {
        [
            self.guess,
            self.expand,
            self.sample,
            self.assemble,
            self.direct,
        ]
        .iter()
        .fold(self.size, |acc, c| acc.plus(c))
    }
}

/// Everything a run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    #[serde(flatten)]
    pub estimate: ScoreEstimate,
    pub truth: Option<f64>,
    pub n_used: Option<f64>,
    pub m: Option<u64>,
    pub nbar: Option<u64>,
    pub beta_count: Option<usize>,
    pub frontier_size_final: Option<usize>,
    pub mode_trace: Vec<String>,
    pub phases: PhaseQueries,
}

impl RunArtifact {
    pub fn rel_err(&self) -> Option<f64> {
        self.truth.map(|t| (self.estimate.estimate / t - 1.0).abs())
    }
}

/// Runs the estimator selected by `config.mode` on a fresh view of `v`.
pub fn run_estimator(
    session: &mut QuerySession<'_>,
    v: NodeId,
    config: &EstimatorConfig,
) -> Result<RunArtifact, EstimateError> {
    config.validate()?;
    match config.mode {
        Mode::Direct => {
            let before = session.counts();
            let est =
                estimate_score_direct(session, v, config.alpha, config.epsilon, config.delta)?;
            let phases = PhaseQueries {
                direct: session.counts().since(&before),
                ..Default::default()
            };
            Ok(RunArtifact {
                estimate: est,
                truth: None,
                n_used: None,
                m: None,
                nbar: None,
                beta_count: None,
                frontier_size_final: None,
                mode_trace: vec!["direct".into()],
                phases,
            })
        }
        Mode::Local => estimate_score_local(session, v, config),
        Mode::Hybrid => estimate_score_hybrid(session, v, config),
    }
}
