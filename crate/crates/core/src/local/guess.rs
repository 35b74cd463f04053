//! Sampled outdegree guesses.
//!
//! Each of `n̄` probes picks a uniform node and adds 1 to the count of each
//! of its parents. A node `u` is a parent of `outdeg(u)` nodes, so its count
//! has mean `n̄·outdeg(u)/n`, and `g(u) = (n/n̄)·(c·ln n + count(u))`
//! overestimates `outdeg(u)` by an additive floor of `c·n·ln n/n̄`.

use rustc_hash::FxHashMap;

use crate::graph::NodeId;
use crate::query::{QueryError, QuerySession};

#[derive(Debug, Clone, Default)]
pub struct GuessTable {
    pub parent_counts: FxHashMap<NodeId, u32>,
    pub n_used: f64,
    pub nbar: u64,
    pub c_guess: f64,
}

impl GuessTable {
    pub fn new(n_used: f64, nbar: u64, c_guess: f64) -> Self {
        assert!(nbar >= 1, "nbar must be at least 1");
        Self {
            parent_counts: FxHashMap::default(),
            n_used,
            nbar,
            c_guess,
        }
    }

    pub fn count(&self, u: NodeId) -> u32 {
        self.parent_counts.get(&u).copied().unwrap_or(0)
    }

    pub fn guess(&self, u: NodeId) -> f64 {
        let log_n = self.n_used.max(2.0).ln();
        self.n_used / self.nbar as f64 * (self.c_guess * log_n + self.count(u) as f64)
    }

    /// One probe: a uniform node and its (cached) parent list.
    pub fn probe(&mut self, session: &mut QuerySession<'_>) -> Result<(), QueryError> {
        let x = session.random_node()?;
        for &p in session.neighbourhood(x)?.parents {
            *self.parent_counts.entry(p).or_insert(0) += 1;
        }
        Ok(())
    }
}

pub fn guess_outdegrees(
    session: &mut QuerySession<'_>,
    n_used: f64,
    nbar: u64,
    c_guess: f64,
) -> Result<GuessTable, QueryError> {
    let mut t = GuessTable::new(n_used, nbar, c_guess);
    for _ in 0..nbar {
        t.probe(session)?;
    }
    Ok(t)
}
