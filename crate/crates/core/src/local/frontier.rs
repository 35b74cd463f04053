//! Frontier expansion with balanced coefficients.
//!
//! The state tracks a growing subgraph `G_m` around `v` (members in crossing
//! order, `u_0 = v`), the conductances `℧_{w,v}` of its members and the
//! β-weighted coefficients of every earlier subgraph in the sequence:
//!
//! - `B = Σ_j β^m_j c^{G_j}`, the coefficient of the deterministic term;
//! - `A_u = Σ_{j≥j_u} β^m_j c^{G_j}_u` for nodes still on the frontier;
//! - `K_i` for crossed nodes, stored as `Λ·k_i` with `Λ = ∏(1−β_j)`.
//!
//! Weights are chosen so that every crossed node has the same weighted value
//! `K_i/γ_i = V` and no frontier node exceeds it. The next node to cross is
//! the frontier node whose weighted value has just reached `V`.
//!
//! Conductances solve `x_w = [w=v] + Σ_{(w,y) internal} α/outdeg(w)·x_y`.
//! The solver keeps the residual of that system and pushes it backwards
//! along member arcs, so adding a member only costs the pushes it triggers.
//! Every push also updates `Σ_{w member child of u} x_w` for frontier parents
//! `u`, which is all we need for their coefficients.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::GammaSource;
use crate::graph::NodeId;
use crate::query::{QueryError, QuerySession};

pub const DEFAULT_COND_TOL: f64 = 1e-12;
const RENORM_BELOW: f64 = 1e-150;

#[derive(Debug, Clone)]
pub struct FrontierNode {
    /// Σ of member-children conductances.
    pub raw: f64,
    /// Accumulated coefficient `A_u`.
    pub acc: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct FrontierState<'g> {
    pub v: NodeId,
    pub alpha: f64,
    pub n_used: f64,
    members: Vec<NodeId>,
    index: FxHashMap<NodeId, usize>,
    outdeg: Vec<usize>,
    parents: Vec<&'g [NodeId]>,
    member_parents: Vec<Vec<u32>>,
    member_gamma: Vec<f64>,
    cond: Vec<f64>,
    resid: Vec<f64>,
    queued: Vec<bool>,
    cond_sum: f64,
    v_dangling: bool,
    frontier: FxHashMap<NodeId, FrontierNode>,
    crossed_k: Vec<f64>,
    lambda: f64,
    b: f64,
    level: f64,
    beta_history: Vec<f64>,
    next: Option<NodeId>,
    tol: f64,
    /// Test hook: multiplies every β by `1 + beta_distortion` (clamped to
    /// `[0,1]`). Zero in normal use.
    pub beta_distortion: f64,
}

impl<'g> FrontierState<'g> {
    /// Builds `G_0 = {v}` (with its self-loop, if any). Costs one
    /// `neighbourhood` query.
    pub fn new(
        session: &mut QuerySession<'g>,
        v: NodeId,
        alpha: f64,
        n_used: f64,
        gamma: &GammaSource,
    ) -> Result<Self, QueryError> {
        Self::with_tolerance(session, v, alpha, n_used, gamma, DEFAULT_COND_TOL)
    }

    pub fn with_tolerance(
        session: &mut QuerySession<'g>,
        v: NodeId,
        alpha: f64,
        n_used: f64,
        gamma: &GammaSource,
        tol: f64,
    ) -> Result<Self, QueryError> {
        session.reveal_input(v)?;
        let nb = session.neighbourhood(v)?;
        let mut st = Self {
            v,
            alpha,
            n_used,
            members: Vec::new(),
            index: FxHashMap::default(),
            outdeg: Vec::new(),
            parents: Vec::new(),
            member_parents: Vec::new(),
            member_gamma: Vec::new(),
            cond: Vec::new(),
            resid: Vec::new(),
            queued: Vec::new(),
            cond_sum: 0.0,
            v_dangling: nb.children.is_empty(),
            frontier: FxHashMap::default(),
            crossed_k: Vec::new(),
            lambda: 1.0,
            b: 0.0,
            level: 0.0,
            beta_history: Vec::new(),
            next: None,
            tol,
            beta_distortion: 0.0,
        };
        st.add_member(v, nb.parents, nb.children, f64::NAN, 0.0, gamma);
        st.solve();

        // base case: all weight on G_0
        st.b = st.c_graph();
        let coeff = st.alpha * st.mu();
        let mut best: Option<(f64, NodeId)> = None;
        for (&u, f) in st.frontier.iter_mut() {
            f.acc = coeff * f.raw;
            let r = f.acc / f.gamma;
            if better_max(r, u, best) {
                best = Some((r, u));
            }
        }
        st.beta_history.push(1.0);
        if let Some((r, u)) = best {
            st.level = r;
            st.next = Some(u);
        }
        Ok(st)
    }

    fn add_member(
        &mut self,
        u: NodeId,
        parents: &'g [NodeId],
        children: &[NodeId],
        gamma_u: f64,
        k_lazy: f64,
        gamma: &GammaSource,
    ) {
        let k = self.members.len();
        self.members.push(u);
        self.index.insert(u, k);
        self.outdeg.push(children.len());
        self.parents.push(parents);
        self.member_gamma.push(gamma_u);
        self.crossed_k.push(k_lazy);
        let mut mp = Vec::new();
        for &p in parents {
            if let Some(&j) = self.index.get(&p) {
                mp.push(j as u32);
            }
        }
        self.member_parents.push(mp);
        for &y in children {
            if y != u {
                if let Some(&j) = self.index.get(&y) {
                    self.member_parents[j].push(k as u32);
                }
            }
        }
        // equation of the new member, its own value still zero
        let r = if u == self.v {
            1.0
        } else {
            let d = children.len() as f64;
            children
                .iter()
                .filter(|&&y| y != u)
                .filter_map(|y| self.index.get(y))
                .map(|&j| self.alpha / d * self.cond[j])
                .sum()
        };
        self.cond.push(0.0);
        self.resid.push(r);
        self.queued.push(false);
        // parents outside become (or stay) frontier nodes
        for &p in parents {
            if !self.index.contains_key(&p) {
                self.frontier.entry(p).or_insert_with(|| FrontierNode {
                    raw: 0.0,
                    acc: 0.0,
                    gamma: gamma.gamma(p),
                });
            }
        }
    }

    fn solve(&mut self) {
        let thr = self.tol * (1.0 - self.alpha);
        let mut queue: VecDeque<usize> = VecDeque::new();
        for i in 0..self.members.len() {
            if self.resid[i].abs() > thr && !self.queued[i] {
                self.queued[i] = true;
                queue.push_back(i);
            }
        }
        let mut pushes: u64 = 0;
        let cap = 1_000_000_000u64;
        while let Some(i) = queue.pop_front() {
            self.queued[i] = false;
            let r = self.resid[i];
            if r.abs() <= thr {
                continue;
            }
            pushes += 1;
            assert!(pushes < cap, "conductance solver failed to converge");
            self.resid[i] = 0.0;
            self.cond[i] += r;
            self.cond_sum += r;
            for &p in self.parents[i] {
                match self.index.get(&p) {
                    Some(&j) => {
                        self.resid[j] += self.alpha / self.outdeg[j] as f64 * r;
                        if self.resid[j].abs() > thr && !self.queued[j] {
                            self.queued[j] = true;
                            queue.push_back(j);
                        }
                    }
                    None => {
                        if let Some(f) = self.frontier.get_mut(&p) {
                            f.raw += r;
                        }
                    }
                }
            }
        }
    }

    /// Crosses the pending node. Returns `false` (and does nothing) once the
    /// frontier is empty. Costs one `neighbourhood` query.
    pub fn expand_step(
        &mut self,
        session: &mut QuerySession<'g>,
        gamma: &GammaSource,
    ) -> Result<bool, QueryError> {
        let Some(u) = self.next else {
            return Ok(false);
        };
        let nb = session.neighbourhood(u)?;
        let f = self
            .frontier
            .remove(&u)
            .expect("pending crosser is on the frontier");
        self.add_member(
            u,
            nb.parents,
            nb.children,
            f.gamma,
            f.acc / self.lambda,
            gamma,
        );
        self.solve();

        let c_graph = self.c_graph();
        let coeff = self.alpha * self.mu();
        if self.frontier.is_empty() {
            self.b = c_graph;
            for k in self.crossed_k.iter_mut() {
                *k = 0.0;
            }
            self.lambda = 1.0;
            self.level = 0.0;
            self.next = None;
            self.beta_history.push(1.0);
            return Ok(true);
        }

        let level = self.level;
        let mut best: Option<(f64, NodeId)> = None;
        for (&w, f) in &self.frontier {
            let gap = (level - f.acc / f.gamma).max(0.0);
            let c = coeff * f.raw / f.gamma;
            let beta = if gap + c > 0.0 { gap / (gap + c) } else { 0.0 };
            if better_min(beta, w, best) {
                best = Some((beta, w));
            }
        }
        let (mut beta, next) = best.expect("frontier nonempty");
        if self.beta_distortion != 0.0 {
            beta = (beta * (1.0 + self.beta_distortion)).clamp(0.0, 1.0);
        }
        let keep = 1.0 - beta;
        for f in self.frontier.values_mut() {
            f.acc = keep * f.acc + beta * coeff * f.raw;
        }
        self.b = keep * self.b + beta * c_graph;
        self.level *= keep;
        self.lambda *= keep;
        self.beta_history.push(beta);
        self.next = Some(next);
        if self.lambda < RENORM_BELOW {
            for k in self.crossed_k.iter_mut() {
                *k *= self.lambda;
            }
            self.lambda = 1.0;
        }
        Ok(true)
    }

    /// `μ`: corrects for `v`'s own dangling mass returning through the jump.
    pub fn mu(&self) -> f64 {
        if self.v_dangling {
            1.0 / (1.0 - self.alpha / self.n_used * self.cond_sum)
        } else {
            1.0
        }
    }

    /// `c^{G_m} = μ·(1−α)/n·Σ_w ℧_{w,v}`.
    pub fn c_graph(&self) -> f64 {
        self.mu() * (1.0 - self.alpha) / self.n_used * self.cond_sum
    }

    /// `c^{G_m}_u` for a frontier node.
    pub fn c_frontier(&self, u: NodeId) -> Option<f64> {
        self.frontier
            .get(&u)
            .map(|f| self.alpha * self.mu() * f.raw)
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn is_member(&self, u: NodeId) -> bool {
        self.index.contains_key(&u)
    }

    pub fn conductance(&self, w: NodeId) -> Option<f64> {
        self.index.get(&w).map(|&i| self.cond[i])
    }

    pub fn member_outdegree(&self, w: NodeId) -> Option<usize> {
        self.index.get(&w).map(|&i| self.outdeg[i])
    }

    /// `K_i` for a crossed member, 0 for `v`.
    pub fn crossed_coeff(&self, w: NodeId) -> Option<f64> {
        self.index.get(&w).map(|&i| self.lambda * self.crossed_k[i])
    }

    pub fn member_gamma(&self, w: NodeId) -> Option<f64> {
        self.index.get(&w).map(|&i| self.member_gamma[i])
    }

    pub fn frontier(&self) -> &FxHashMap<NodeId, FrontierNode> {
        &self.frontier
    }

    pub fn frontier_acc(&self, u: NodeId) -> Option<f64> {
        self.frontier.get(&u).map(|f| f.acc)
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    pub fn csum_acc(&self) -> f64 {
        self.b
    }

    pub fn balance_level(&self) -> f64 {
        self.level
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `β^j_j` for `j = 0..=m`; the first entry is always 1.
    pub fn beta_history(&self) -> &[f64] {
        &self.beta_history
    }

    pub fn next_crosser(&self) -> Option<NodeId> {
        self.next
    }

    /// Largest absolute residual of the conductance system.
    pub fn max_residual(&self) -> f64 {
        self.resid.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Checks the three balance conditions: equal weighted values for
    /// crossed nodes, no frontier node above `V`, and the pending crosser
    /// exactly at `V`.
    pub fn check_balance(&self, rel_tol: f64) -> Result<(), String> {
        let v = self.level;
        let close =
            |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        for (i, &w) in self.members.iter().enumerate().skip(1) {
            let kv = self.lambda * self.crossed_k[i] / self.member_gamma[i];
            if !close(kv, v) {
                return Err(format!("crossed node {w}: K/γ = {kv:e}, V = {v:e}"));
            }
        }
        for (&u, f) in &self.frontier {
            let r = f.acc / f.gamma;
            if r > v * (1.0 + rel_tol) {
                return Err(format!("frontier node {u}: A/γ = {r:e} above V = {v:e}"));
            }
        }
        if let Some(u) = self.next {
            let f = &self.frontier[&u];
            let r = f.acc / f.gamma;
            if !close(r, v) {
                return Err(format!("pending crosser {u}: A/γ = {r:e}, V = {v:e}"));
            }
        }
        for &b in &self.beta_history {
            if !(0.0..=1.0).contains(&b) {
                return Err(format!("β = {b} outside [0,1]"));
            }
        }
        if self.lambda <= 0.0 {
            return Err(format!("Λ = {} not positive", self.lambda));
        }
        Ok(())
    }
}

fn better_max(r: f64, u: NodeId, best: Option<(f64, NodeId)>) -> bool {
    match best {
        None => true,
        Some((br, bu)) => r > br || (r == br && u < bu),
    }
}

fn better_min(r: f64, u: NodeId, best: Option<(f64, NodeId)>) -> bool {
    match best {
        None => true,
        Some((br, bu)) => r < br || (r == br && u < bu),
    }
}
