use serde::{Deserialize, Serialize};

use super::{
    EstimateError, EstimatorConfig, FrontierState, GammaSource, GuessTable, PhaseQueries,
    RunArtifact,
};
use crate::graph::NodeId;
use crate::query::{QueryCounts, QueryError, QuerySession};
use crate::sampler::{sample_node, CollisionCounter, Method, SampleBatch, ScoreEstimate};

/// Parts of `p̂ = q̂ + ŝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub q_hat: f64,
    pub s_hat: f64,
    pub x_empty: f64,
    pub estimate: f64,
}

/// Combines the expansion state with a sample batch. Every distinct drawn
/// node gets one (cached) `neighbourhood` call for its outdegree.
pub fn assemble_estimate(
    state: &FrontierState<'_>,
    batch: &SampleBatch,
    session: &mut QuerySession<'_>,
) -> Result<Assembly, QueryError> {
    let v = state.v;
    let alpha = state.alpha;
    let mut dangling_hits = 0u64;
    let mut contrib = 0.0;
    for &u in &batch.draws {
        let outdeg = match state.member_outdegree(u) {
            Some(d) => d,
            None => session.neighbourhood(u)?.outdegree(),
        };
        if outdeg == 0 {
            if u != v {
                dangling_hits += 1;
            }
            continue;
        }
        if u == v {
            continue;
        }
        if let Some(k) = state.crossed_coeff(u) {
            contrib += k / outdeg as f64;
        } else if let Some(a) = state.frontier_acc(u) {
            contrib += a / outdeg as f64;
        }
    }
    let nbar = batch.len().max(1) as f64;
    let x_empty = dangling_hits as f64 / nbar;
    let q_hat = state.csum_acc() * (1.0 + alpha / (1.0 - alpha) * x_empty);
    let s_hat = contrib / nbar;
    Ok(Assembly {
        q_hat,
        s_hat,
        x_empty,
        estimate: q_hat + s_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Size,
    Guess,
    Init,
    Expand,
    Sample,
    Assemble,
    Done,
}

/// The local pipeline as a resumable state machine: each call to
/// [`LocalRun::advance`] does one unit of work (a probe, a crossing, a draw,
/// or the final assembly), so the hybrid driver can interleave it with
/// direct sampling on the same session.
pub struct LocalRun<'g> {
    pub v: NodeId,
    cfg: EstimatorConfig,
    phase: Phase,
    counter: CollisionCounter,
    n_used: Option<f64>,
    budget: u64,
    guess: Option<GuessTable>,
    gamma: Option<GammaSource>,
    state: Option<FrontierState<'g>>,
    steps: u64,
    batch: SampleBatch,
    assembly: Option<Assembly>,
    pub phases: PhaseQueries,
    pub trace: Vec<String>,
    /// Set by tests to perturb β updates.
    pub beta_distortion: f64,
}

impl<'g> LocalRun<'g> {
    /// `n_hint` overrides `cfg.n_known` (the hybrid driver passes `n̂`).
    pub fn new(v: NodeId, cfg: &EstimatorConfig, n_hint: Option<f64>) -> Self {
        let n_used = n_hint.or(cfg.n_known.map(|n| n as f64));
        let mut run = Self {
            v,
            cfg: cfg.clone(),
            phase: Phase::Size,
            counter: CollisionCounter::default(),
            n_used,
            budget: 0,
            guess: None,
            gamma: None,
            state: None,
            steps: 0,
            batch: SampleBatch::default(),
            assembly: None,
            phases: PhaseQueries::default(),
            trace: Vec::new(),
            beta_distortion: 0.0,
        };
        if let Some(n) = n_used {
            run.start_guess(n);
        } else {
            run.trace.push("size".into());
        }
        run
    }

    fn start_guess(&mut self, n: f64) {
        self.n_used = Some(n);
        self.budget = self.cfg.budget(n);
        match &self.cfg.outdeg_bounds {
            Some(b) => {
                self.gamma = Some(GammaSource::Bounds(b.clone()));
                self.phase = Phase::Init;
            }
            None => {
                self.guess = Some(GuessTable::new(n, self.budget, self.cfg.c_guess));
                self.phase = Phase::Guess;
                self.trace.push("guess".into());
            }
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn n_used(&self) -> Option<f64> {
        self.n_used
    }

    pub fn state(&self) -> Option<&FrontierState<'g>> {
        self.state.as_ref()
    }

    pub fn assembly(&self) -> Option<Assembly> {
        self.assembly
    }

    /// Best available value: the assembled estimate, else the deterministic
    /// part of the current expansion.
    pub fn current_estimate(&self) -> f64 {
        match (&self.assembly, &self.state) {
            (Some(a), _) => a.estimate,
            (None, Some(s)) => s.csum_acc(),
            _ => 0.0,
        }
    }

    pub fn queries(&self) -> QueryCounts {
        let mut p = self.phases;
        p.direct = QueryCounts::default();
        p.total()
    }

    /// Does one unit of work. Returns `true` once the estimate is ready.
    pub fn advance(&mut self, session: &mut QuerySession<'g>) -> Result<bool, QueryError> {
        let before = session.counts();
        let phase = self.phase;
        let res = self.advance_inner(session);
        let spent = session.counts().since(&before);
        let slot = match phase {
            Phase::Size => &mut self.phases.size,
            Phase::Guess => &mut self.phases.guess,
            Phase::Init | Phase::Expand => &mut self.phases.expand,
            Phase::Sample => &mut self.phases.sample,
            Phase::Assemble | Phase::Done => &mut self.phases.assemble,
        };
        *slot = slot.plus(&spent);
        res.map(|_| self.is_done())
    }

    fn advance_inner(&mut self, session: &mut QuerySession<'g>) -> Result<(), QueryError> {
        match self.phase {
            Phase::Size => {
                self.counter.observe(session.random_node()?);
                if self.counter.collisions >= self.cfg.target_collisions {
                    let n = self.counter.estimate().expect("collided").n_hat as f64;
                    self.start_guess(n);
                }
            }
            Phase::Guess => {
                let t = self.guess.as_mut().expect("guess table");
                t.probe(session)?;
                self.steps += 1;
                if self.steps >= self.budget {
                    self.gamma = Some(GammaSource::Guess(self.guess.take().expect("guess table")));
                    self.steps = 0;
                    self.phase = Phase::Init;
                }
            }
            Phase::Init => {
                let gamma = self.gamma.as_ref().expect("gamma");
                let mut st = FrontierState::new(
                    session,
                    self.v,
                    self.cfg.alpha,
                    self.n_used.expect("n"),
                    gamma,
                )?;
                st.beta_distortion = self.beta_distortion;
                self.state = Some(st);
                self.steps = 0;
                self.phase = Phase::Expand;
                self.trace.push("expand".into());
            }
            Phase::Expand => {
                let gamma = self.gamma.as_ref().expect("gamma");
                let st = self.state.as_mut().expect("state");
                let moved = self.steps < self.budget && st.expand_step(session, gamma)?;
                if moved {
                    self.steps += 1;
                }
                if !moved || self.steps >= self.budget {
                    self.steps = 0;
                    self.phase = Phase::Sample;
                    self.trace.push("sample".into());
                }
            }
            Phase::Sample => {
                if self.steps < self.budget {
                    self.batch.push(sample_node(session, self.cfg.alpha)?);
                    self.steps += 1;
                }
                if self.steps >= self.budget {
                    self.phase = Phase::Assemble;
                }
            }
            Phase::Assemble => {
                let st = self.state.as_ref().expect("state");
                self.assembly = Some(assemble_estimate(st, &self.batch, session)?);
                self.phase = Phase::Done;
                self.trace.push("assemble".into());
            }
            Phase::Done => {}
        }
        Ok(())
    }

    pub fn into_artifact(self, converged: bool) -> RunArtifact {
        let estimate = ScoreEstimate {
            node: self.v,
            estimate: self.current_estimate(),
            epsilon: self.cfg.epsilon,
            delta: self.cfg.delta,
            method: Method::Local,
            queries: self.queries(),
            converged,
        };
        RunArtifact {
            estimate,
            truth: None,
            n_used: self.n_used,
            m: (self.budget > 0).then_some(self.budget),
            nbar: (self.budget > 0).then_some(self.budget),
            beta_count: self.state.as_ref().map(|s| s.beta_history().len()),
            frontier_size_final: self.state.as_ref().map(|s| s.frontier_len()),
            mode_trace: self.trace,
            phases: self.phases,
        }
    }
}

/// Runs the local pipeline to completion. A query cap returns the best
/// partial value with `converged = false`.
pub fn estimate_score_local(
    session: &mut QuerySession<'_>,
    v: NodeId,
    cfg: &EstimatorConfig,
) -> Result<RunArtifact, EstimateError> {
    cfg.validate()?;
    session.reveal_input(v)?;
    let mut run = LocalRun::new(v, cfg, None);
    loop {
        match run.advance(session) {
            Ok(true) => return Ok(run.into_artifact(true)),
            Ok(false) => {}
            Err(QueryError::CapReached(_)) => return Ok(run.into_artifact(false)),
            Err(e) => return Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::local::OutdegreeBounds;
    use crate::oracle::exact_pagerank;

    #[test]
    fn four_node_graph_is_exact() {
        // a=0, b=1, v=2, t=3: a->v, b->v, v->t, a->t, b->t, t->t
        let g =
            DirectedGraph::from_arcs(4, [(0, 2), (1, 2), (2, 3), (0, 3), (1, 3), (3, 3)]).unwrap();
        let cfg = EstimatorConfig {
            alpha: 0.5,
            n_known: Some(4),
            ..Default::default()
        };
        let mut s = QuerySession::new(&g, 9);
        let art = estimate_score_local(&mut s, 2, &cfg).unwrap();
        let p = exact_pagerank(&g, 0.5, 1e-13);
        assert_eq!(art.frontier_size_final, Some(0));
        assert!((art.estimate.estimate - p.get(2)).abs() < 1e-10);
        assert_eq!(art.estimate.queries, s.counts());
    }

    #[test]
    fn accounting_reconciles() {
        let g = crate::graph::gen_random_graph(2000, 4.0, 8, 5).unwrap();
        let cfg = EstimatorConfig {
            alpha: 0.5,
            n_known: Some(2000),
            ..Default::default()
        };
        let mut s = QuerySession::new(&g, 1);
        let art = estimate_score_local(&mut s, 17, &cfg).unwrap();
        let ph = art.phases;
        let nbar = art.nbar.unwrap();
        assert_eq!(ph.guess.random_node, nbar);
        assert!(ph.guess.neighbourhood <= nbar);
        assert!(ph.expand.neighbourhood <= art.m.unwrap() + 1);
        assert_eq!(ph.sample.neighbourhood, 0);
        assert!(ph.assemble.neighbourhood <= nbar);
        assert_eq!(ph.total(), s.counts());
        assert_eq!(art.estimate.queries, s.counts());
    }

    #[test]
    fn no_hits_gives_deterministic_part() {
        let g = DirectedGraph::from_arcs(3, [(1, 0), (0, 0), (2, 2)]).unwrap();
        let st_batch = SampleBatch {
            draws: vec![2, 2, 2],
            per_draw_queries: vec![1, 1, 1],
            first_jumps: vec![2, 2, 2],
        };
        let mut s = QuerySession::new(&g, 1);
        let gamma = GammaSource::Bounds(OutdegreeBounds::Uniform { min: 1, max: 1 });
        let st = FrontierState::new(&mut s, 0, 0.5, 3.0, &gamma).unwrap();
        s.reveal_input(2).unwrap();
        let a = assemble_estimate(&st, &st_batch, &mut s).unwrap();
        assert_eq!(a.s_hat, 0.0);
        assert_eq!(a.estimate, a.q_hat);
    }

    #[test]
    fn cap_returns_unconverged() {
        let g = crate::graph::gen_random_graph(5000, 4.0, 8, 5).unwrap();
        let cfg = EstimatorConfig {
            query_cap: Some(10),
            ..Default::default()
        };
        let mut s = QuerySession::new(&g, 1).with_cap(cfg.query_cap);
        let art = estimate_score_local(&mut s, 3, &cfg).unwrap();
        assert!(!art.estimate.converged);
        assert_eq!(art.estimate.queries.total, 10);
    }
}
