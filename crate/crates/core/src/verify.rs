//! Deterministic identity suites: the subgraph decomposition of `P(v)`, the
//! expectation identity of the local estimator, balance invariants, lazy
//! scaling against a from-scratch recomputation, and conductance
//! cross-checks. Every case derives its own RNG from the suite seed, so a
//! report is identical across runs and execution strategies.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::graph::{gen_random_graph, DirectedGraph, NodeId};
use crate::local::{FrontierState, GammaSource, OutdegreeBounds};
use crate::oracle::{
    conductance_bruteforce, conductance_exact, decomposition_score, exact_pagerank,
    subgraph_decomposition, DEFAULT_TOL,
};
use crate::par::{map_indexed, Execution};
use crate::query::QuerySession;

pub const IDENTITY_TOL: f64 = 1e-9;
pub const BALANCE_TOL: f64 = 1e-9;
pub const SCRATCH_TOL: f64 = 1e-10;
const MAX_REPORTED: usize = 5;
const BRUTE_LEN: usize = 80;
/// Solver tolerance for the expansions checked here, tight enough that
/// truncation stays below the comparison tolerances.
pub const VERIFY_COND_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Cases per suite (the conductance suite runs half as many).
    pub cases: usize,
    /// Passed to every expansion; nonzero values corrupt the β update.
    pub beta_distortion: f64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            cases: 200,
            beta_distortion: 0.0,
            exec: Execution::auto(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub passed: usize,
    /// Largest observed deviation over all checks of the suite.
    pub max_error: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }

    fn collect(name: &str, results: Vec<CaseResult>) -> Self {
        let cases = results.len();
        let passed = results.iter().filter(|r| r.failure.is_none()).count();
        let max_error = results.iter().map(|r| r.max_error).fold(0.0, f64::max);
        let failures = results
            .into_iter()
            .enumerate()
            .filter_map(|(i, r)| r.failure.map(|f| format!("case {i}: {f}")))
            .take(MAX_REPORTED)
            .collect();
        Self {
            name: name.to_string(),
            cases,
            passed,
            max_error,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::ok)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verify seed={}", self.seed)?;
        for s in &self.suites {
            let tag = if s.ok() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{tag} {:<12} {}/{} max_err={:.3e}",
                s.name, s.passed, s.cases, s.max_error
            )?;
            for msg in &s.failures {
                writeln!(f, "  {msg}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
struct CaseResult {
    max_error: f64,
    failure: Option<String>,
}

impl CaseResult {
    fn check(&mut self, err: f64, tol: f64, what: impl FnOnce() -> String) {
        if err > self.max_error || err.is_nan() {
            self.max_error = if err.is_nan() { f64::INFINITY } else { err };
        }
        if self.failure.is_none() && (err.is_nan() || err > tol) {
            self.failure = Some(format!("{} (error {err:.3e})", what()));
        }
    }

    fn fail(&mut self, msg: String) {
        if self.failure.is_none() {
            self.failure = Some(msg);
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    VerifyReport {
        seed: opts.seed,
        suites: vec![
            decomposition_suite(opts),
            expectation_suite(opts),
            balance_suite(opts),
            scratch_suite(opts),
            conductance_suite(opts),
        ],
    }
}

fn case_rng(seed: u64, suite: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (suite << 40) ^ i as u64)
}

/// A random graph on `2..=max_n` nodes with sparse, mixed outdegrees.
fn small_graph(rng: &mut ChaCha8Rng, max_n: usize) -> DirectedGraph {
    let n = rng.random_range(2..=max_n);
    let max = rng.random_range(1..=n.min(5));
    let avg = rng.random_range(0.3..=1.0) * max as f64;
    gen_random_graph(n, avg, max, rng.random()).expect("valid generator input")
}

fn random_gamma(rng: &mut ChaCha8Rng, n: usize) -> GammaSource {
    let bounds = (0..n)
        .map(|_| {
            let lo = rng.random_range(1..=4u32);
            (lo, lo + rng.random_range(0..=3u32))
        })
        .collect();
    GammaSource::Bounds(OutdegreeBounds::PerNode {
        bounds: Arc::new(bounds),
    })
}

fn random_alpha(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.1..0.95)
}

/// Subgraph decomposition against power iteration.
pub fn decomposition_suite(opts: &VerifyOptions) -> SuiteReport {
    let results = map_indexed(opts.exec, opts.cases, |i| {
        let mut rng = case_rng(opts.seed, 1, i);
        let g = small_graph(&mut rng, 12);
        let alpha = random_alpha(&mut rng);
        let v = rng.random_range(0..g.node_count()) as NodeId;
        let mut members = vec![v];
        for u in g.nodes() {
            if u != v && !g.is_dangling(u) && rng.random_bool(0.5) {
                members.push(u);
            }
        }
        let p = exact_pagerank(&g, alpha, DEFAULT_TOL);
        let mut r = CaseResult::default();
        match decomposition_score(&g, &members, v, &p) {
            Ok(s) => r.check((s - p.get(v)).abs(), IDENTITY_TOL, || {
                format!("v={v} |Ḡ|={} n={}", members.len(), g.node_count())
            }),
            Err(e) => r.fail(e.to_string()),
        }
        r
    });
    SuiteReport::collect("decomposition", results)
}

/// Coefficient functional of the current state evaluated at exact scores.
pub fn coefficient_functional(
    state: &FrontierState<'_>,
    graph: &DirectedGraph,
    scores: &[f64],
) -> f64 {
    let v = state.v;
    let alpha = state.alpha;
    let x_empty: f64 = graph
        .nodes()
        .filter(|&u| u != v && graph.is_dangling(u))
        .map(|u| scores[u as usize])
        .sum();
    let crossed: f64 = state
        .members()
        .iter()
        .skip(1)
        .map(|&w| state.crossed_coeff(w).unwrap() * scores[w as usize] / graph.outdegree(w) as f64)
        .sum();
    let frontier: f64 = state
        .frontier()
        .iter()
        .map(|(&u, f)| f.acc * scores[u as usize] / graph.outdegree(u) as f64)
        .sum();
    state.csum_acc() * (1.0 + alpha / (1.0 - alpha) * x_empty) + crossed + frontier
}

struct Expansion {
    graph: DirectedGraph,
    alpha: f64,
    v: NodeId,
    gamma: GammaSource,
    steps: usize,
}

fn random_expansion(rng: &mut ChaCha8Rng, max_n: usize) -> Expansion {
    let graph = small_graph(rng, max_n);
    let alpha = random_alpha(rng);
    let v = rng.random_range(0..graph.node_count()) as NodeId;
    let gamma = random_gamma(rng, graph.node_count());
    let steps = rng.random_range(0..=graph.node_count());
    Expansion {
        graph,
        alpha,
        v,
        gamma,
        steps,
    }
}

/// Runs up to `e.steps` expansion steps, calling `visit` on the initial
/// state and after every step.
fn expand_with<F>(e: &Expansion, distortion: f64, mut visit: F) -> Result<(), String>
where
    F: FnMut(&FrontierState<'_>),
{
    let n = e.graph.node_count() as f64;
    let mut s = QuerySession::new(&e.graph, 0);
    let mut st = FrontierState::with_tolerance(&mut s, e.v, e.alpha, n, &e.gamma, VERIFY_COND_TOL)
        .map_err(|x| x.to_string())?;
    st.beta_distortion = distortion;
    visit(&st);
    for _ in 0..e.steps {
        if !st
            .expand_step(&mut s, &e.gamma)
            .map_err(|x| x.to_string())?
        {
            break;
        }
        visit(&st);
    }
    Ok(())
}

/// The estimator's expectation at exact scores equals `P(v)`.
pub fn expectation_suite(opts: &VerifyOptions) -> SuiteReport {
    let results = map_indexed(opts.exec, opts.cases, |i| {
        let mut rng = case_rng(opts.seed, 2, i);
        let e = random_expansion(&mut rng, 30);
        let p = exact_pagerank(&e.graph, e.alpha, DEFAULT_TOL);
        let mut r = CaseResult::default();
        let mut last = None;
        let run = expand_with(&e, opts.beta_distortion, |st| {
            last = Some((
                coefficient_functional(st, &e.graph, &p.scores),
                st.member_count(),
            ));
        });
        if let Err(msg) = run {
            r.fail(msg);
        }
        if let Some((value, m)) = last {
            r.check((value - p.get(e.v)).abs(), IDENTITY_TOL, || {
                format!("v={} stopped with {m} members", e.v)
            });
        }
        r
    });
    SuiteReport::collect("expectation", results)
}

/// Balance conditions after every step.
pub fn balance_suite(opts: &VerifyOptions) -> SuiteReport {
    let results = map_indexed(opts.exec, opts.cases, |i| {
        let mut rng = case_rng(opts.seed, 2, i);
        let e = random_expansion(&mut rng, 30);
        let mut r = CaseResult::default();
        let run = expand_with(&e, opts.beta_distortion, |st| {
            if let Err(msg) = st.check_balance(BALANCE_TOL) {
                r.fail(format!("after {} members: {msg}", st.member_count()));
            }
            if let Some(err) = sum_of_weights_error(st.beta_history()) {
                r.check(err, BALANCE_TOL, || "weights do not sum to 1".into());
            }
        });
        if let Err(msg) = run {
            r.fail(msg);
        }
        r
    });
    SuiteReport::collect("balance", results)
}

/// `|Σ_j β^m_j − 1|` for the weights implied by a β history.
fn sum_of_weights_error(history: &[f64]) -> Option<f64> {
    let w = weights(history);
    (!w.is_empty()).then(|| (w.iter().sum::<f64>() - 1.0).abs())
}

/// `β^m_j = β^j_j·∏_{i>j}(1−β^i_i)`.
pub fn weights(history: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; history.len()];
    let mut tail = 1.0;
    for j in (0..history.len()).rev() {
        w[j] = history[j] * tail;
        tail *= 1.0 - history[j];
    }
    w
}

/// Coefficients of a subgraph sequence recomputed without any incremental
/// state.
#[derive(Debug, Clone)]
pub struct ScratchCoefficients {
    pub betas: Vec<f64>,
    pub b: f64,
    pub crossed: FxHashMap<NodeId, f64>,
    pub frontier: FxHashMap<NodeId, f64>,
}

/// Recomputes every `β^j_j`, `B`, `K_i` and `A_u` for the subgraphs
/// `G_j = {u_0..u_j}` given by `order`, with dense conductance solves.
pub fn scratch_coefficients(
    graph: &DirectedGraph,
    order: &[NodeId],
    alpha: f64,
    gamma: &GammaSource,
) -> Result<ScratchCoefficients, String> {
    let n = graph.node_count() as f64;
    let v = order[0];
    let decs = (1..=order.len())
        .map(|j| subgraph_decomposition(graph, &order[..j], v, alpha, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let c_of = |j: usize, u: NodeId| decs[j].c_frontier.get(&u).copied().unwrap_or(0.0);
    let acc =
        |w: &[f64], u: NodeId| -> f64 { w.iter().enumerate().map(|(j, b)| b * c_of(j, u)).sum() };

    let mut betas = vec![1.0];
    for j in 1..order.len() {
        let prev = weights(&betas);
        let crosser = order[j];
        let level = acc(&prev, crosser) / gamma.gamma(crosser);
        let front = &decs[j].c_frontier;
        let beta = if front.is_empty() {
            1.0
        } else {
            front
                .iter()
                .map(|(&u, &c)| {
                    let g = gamma.gamma(u);
                    let gap = (level - acc(&prev, u) / g).max(0.0);
                    if gap + c / g > 0.0 {
                        gap / (gap + c / g)
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min)
        };
        betas.push(beta);
    }
    let w = weights(&betas);
    let m = order.len() - 1;
    let b = w.iter().zip(&decs).map(|(x, d)| x * d.c_graph).sum();
    let crossed = order
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &u)| (u, acc(&w[..i], u)))
        .collect();
    let frontier = decs[m]
        .c_frontier
        .keys()
        .map(|&u| (u, acc(&w, u)))
        .collect();
    Ok(ScratchCoefficients {
        betas,
        b,
        crossed,
        frontier,
    })
}

/// Lazily scaled state against [`scratch_coefficients`].
pub fn scratch_suite(opts: &VerifyOptions) -> SuiteReport {
    let results = map_indexed(opts.exec, opts.cases, |i| {
        let mut rng = case_rng(opts.seed, 3, i);
        let e = random_expansion(&mut rng, 12);
        let mut r = CaseResult::default();
        let run = expand_with(&e, opts.beta_distortion, |st| {
            let order = st.members();
            let scratch = match scratch_coefficients(&e.graph, order, e.alpha, &e.gamma) {
                Ok(s) => s,
                Err(msg) => return r.fail(msg),
            };
            let m = order.len();
            for (j, (&a, &b)) in st.beta_history().iter().zip(&scratch.betas).enumerate() {
                r.check((a - b).abs(), SCRATCH_TOL, || format!("β_{j} at m={m}"));
            }
            // errors relative to the largest coefficient, so that entries
            // that vanish exactly in one computation and sit at rounding
            // level in the other do not count as relative error 1
            let scale = scratch
                .crossed
                .values()
                .chain(scratch.frontier.values())
                .fold(scratch.b.abs(), |s, x| s.max(x.abs()));
            let err = |a: f64, b: f64| {
                if scale > 0.0 {
                    (a - b).abs() / scale
                } else {
                    (a - b).abs()
                }
            };
            r.check(err(st.csum_acc(), scratch.b), SCRATCH_TOL, || {
                format!("B at m={m}")
            });
            for (&u, &k) in &scratch.crossed {
                let got = st.crossed_coeff(u).unwrap_or(f64::NAN);
                r.check(err(got, k), SCRATCH_TOL, || format!("K_{u} at m={m}"));
            }
            if scratch.frontier.len() != st.frontier_len() {
                r.fail(format!(
                    "frontier size {} vs {}",
                    st.frontier_len(),
                    scratch.frontier.len()
                ));
            }
            for (&u, &a) in &scratch.frontier {
                let got = st.frontier_acc(u).unwrap_or(f64::NAN);
                r.check(err(got, a), SCRATCH_TOL, || format!("A_{u} at m={m}"));
            }
        });
        if let Err(msg) = run {
            r.fail(msg);
        }
        r
    });
    SuiteReport::collect("scratch", results)
}

/// Solver conductances against a dense solve, truncated path sums, the
/// first-arc recurrence, and monotonicity under growth.
pub fn conductance_suite(opts: &VerifyOptions) -> SuiteReport {
    let results = map_indexed(opts.exec, opts.cases.div_ceil(2), |i| {
        let mut rng = case_rng(opts.seed, 4, i);
        let graph = small_graph(&mut rng, 10);
        let alpha = rng.random_range(0.1..0.8);
        let v = rng.random_range(0..graph.node_count()) as NodeId;
        let mut pool: Vec<NodeId> = graph
            .nodes()
            .filter(|&u| u != v && !graph.is_dangling(u))
            .collect();
        pool.shuffle(&mut rng);
        let mut r = CaseResult::default();
        let mut members = vec![v];
        let mut prev: Option<FxHashMap<NodeId, f64>> = None;
        for extra in std::iter::once(None).chain(pool.into_iter().map(Some)) {
            members.extend(extra);
            let exact = match conductance_exact(&graph, &members, v, alpha) {
                Ok(t) => t,
                Err(e) => {
                    r.fail(e.to_string());
                    return r;
                }
            };
            let brute = match conductance_bruteforce(&graph, &members, v, alpha, BRUTE_LEN) {
                Ok(t) => t,
                Err(e) => {
                    r.fail(e.to_string());
                    return r;
                }
            };
            for &w in &members {
                let x = exact.get(w);
                let lo = brute.get(w);
                r.check((lo - x).max(x - lo - brute.tail).max(0.0), 1e-12, || {
                    format!("path sum outside its tail bound at {w}")
                });
                let rec = if w == v { 1.0 } else { 0.0 }
                    + graph
                        .children(w)
                        .iter()
                        .filter(|y| members.contains(y))
                        .map(|&y| alpha / graph.outdegree(w) as f64 * exact.get(y))
                        .sum::<f64>();
                r.check((rec - x).abs(), 1e-12, || format!("recurrence at {w}"));
                if let Some(p) = &prev {
                    let before = p.get(&w).copied().unwrap_or(0.0);
                    r.check((before - x).max(0.0), 1e-12, || {
                        format!("conductance of {w} dropped")
                    });
                }
            }
            prev = Some(exact.values);
        }
        // the incremental solver along a real expansion
        let e = Expansion {
            gamma: random_gamma(&mut rng, graph.node_count()),
            steps: graph.node_count(),
            graph,
            alpha,
            v,
        };
        let run = expand_with(&e, 0.0, |st| {
            match conductance_exact(&e.graph, st.members(), e.v, e.alpha) {
                Ok(t) => {
                    for &w in st.members() {
                        let got = st.conductance(w).unwrap();
                        // ℧_{v,v} >= 1 sets the scale
                        r.check((got - t.get(w)).abs(), SCRATCH_TOL, || {
                            format!("solver conductance at {w}")
                        });
                    }
                }
                Err(err) => r.fail(err.to_string()),
            }
        });
        if let Err(msg) = run {
            r.fail(msg);
        }
        r
    });
    SuiteReport::collect("conductance", results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(distortion: f64) -> VerifyOptions {
        VerifyOptions {
            seed: 9,
            cases: 40,
            beta_distortion: distortion,
            ..Default::default()
        }
    }

    #[test]
    fn suites_pass() {
        let rep = run_all(&quick(0.0));
        assert!(rep.all_passed(), "{rep}");
    }

    #[test]
    fn corrupted_beta_is_caught() {
        let rep = run_all(&quick(0.25));
        assert!(!rep.suite("balance").unwrap().ok());
        assert!(!rep.suite("scratch").unwrap().ok());
        assert!(rep.suite("decomposition").unwrap().ok());
    }

    #[test]
    fn weights_telescope() {
        let w = weights(&[1.0, 0.3, 0.5, 0.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[3], 0.0);
        assert!((w[0] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn report_is_deterministic() {
        let a = run_all(&quick(0.0));
        let b = run_all(&VerifyOptions {
            exec: Execution::Sequential,
            ..quick(0.0)
        });
        assert_eq!(a, b);
    }
}
