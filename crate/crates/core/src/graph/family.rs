//! Two-subgraph families with a hidden score gap.
//!
//! Each instance has two near-identical halves rooted at `u` and `v`. Only
//! `u` receives extra mass, via `s_u` and a set of level-2 nodes pointing at
//! it, so telling the halves apart requires discovering one of those few
//! nodes. For very small target scores both roots get a chain of `k` nodes
//! and the designated pair moves to the chain ends.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DirectedGraph, GraphError, NodeId};
use crate::util::ceil_tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Maximum outdegree above `n^{1/3}`; level-1 fan-out is `⌈1/√f⌉`.
    HighOutdeg,
    /// Outdegree budget `1 ≤ γ ≤ n^{1/3}`; padded with isolated nodes.
    LowOutdeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundFamilySpec {
    pub n0: u64,
    pub alpha: f64,
    pub eta: f64,
    pub c_gap: f64,
    pub regime: Regime,
    /// Target score level at `n0`.
    pub f: f64,
    /// Outdegree budget, required for [`Regime::LowOutdeg`].
    pub gamma: Option<f64>,
    /// `None` derives the chain length from `f`; `Some(k)` forces it.
    /// `Some(0)` builds the unchained graph at `f` even below the threshold.
    pub chain_k: Option<u32>,
    pub seed: u64,
}

impl LowerBoundFamilySpec {
    pub fn high(n0: u64, f: f64, alpha: f64, eta: f64, c_gap: f64, seed: u64) -> Self {
        Self {
            n0,
            alpha,
            eta,
            c_gap,
            regime: Regime::HighOutdeg,
            f,
            gamma: None,
            chain_k: None,
            seed,
        }
    }

    pub fn low(n0: u64, f: f64, gamma: f64, alpha: f64, eta: f64, c_gap: f64, seed: u64) -> Self {
        Self {
            n0,
            alpha,
            eta,
            c_gap,
            regime: Regime::LowOutdeg,
            f,
            gamma: Some(gamma),
            chain_k: None,
            seed,
        }
    }

    pub fn with_chain(mut self, k: u32) -> Self {
        self.chain_k = Some(k);
        self
    }

    /// Score level below which the chain adaptation applies.
    pub fn threshold(&self) -> f64 {
        let n0 = self.n0 as f64;
        match self.regime {
            Regime::HighOutdeg => n0.powf(-2.0 / 3.0),
            Regime::LowOutdeg => (n0 * self.gamma.unwrap_or(1.0)).powf(-0.5),
        }
    }

    /// Chain length actually used.
    pub fn effective_chain_k(&self) -> u32 {
        if let Some(k) = self.chain_k {
            return k;
        }
        let t = self.threshold();
        if self.f >= t {
            0
        } else {
            // log base alpha of f/t, with f/t < 1 so the result is positive
            let x = (self.f / t).ln() / self.alpha.ln();
            ceil_tol(x).max(1.0) as u32
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidParameter(m));
        let n0 = self.n0 as f64;
        if self.n0 == 0 {
            return bad("n0 must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0,1)", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta {} must be positive", self.eta));
        }
        if !(self.f <= 1.0 && self.f * n0 >= 1.0 - 1e-12) {
            return bad(format!("f {} outside [1/n0, 1]", self.f));
        }
        if self.c_gap.is_nan() || self.c_gap < 4.0 {
            return bad(format!("c_gap {} below 4", self.c_gap));
        }
        if self.effective_chain_k() > 0 {
            let need = 2.0 + 1.0 / (self.alpha * (1.0 - self.alpha));
            if self.c_gap < need {
                return bad(format!(
                    "chained family needs c_gap >= {need:.4}, got {}",
                    self.c_gap
                ));
            }
        }
        match (self.regime, self.gamma) {
            (Regime::HighOutdeg, Some(g)) if g <= n0.cbrt() => bad(format!(
                "high-outdeg regime needs gamma > n0^(1/3) = {:.4}, got {g}",
                n0.cbrt()
            )),
            (Regime::LowOutdeg, None) => bad("low-outdeg regime needs gamma".into()),
            (Regime::LowOutdeg, Some(g)) if !(g >= 1.0 && g <= n0.cbrt() + 1e-12) => bad(format!(
                "low-outdeg regime needs 1 <= gamma <= n0^(1/3) = {:.4}, got {g}",
                n0.cbrt()
            )),
            _ => Ok(()),
        }
    }

    pub fn layout(&self) -> Result<FamilyLayout, GraphError> {
        self.validate()?;
        let n0 = self.n0 as f64;
        let a = self.alpha;
        let chain_k = self.effective_chain_k();
        let f_base = if chain_k > 0 {
            self.threshold()
        } else {
            self.f
        };
        let (l1, fan) = match self.regime {
            Regime::HighOutdeg => (
                ceil_tol(n0 * f_base.sqrt() / a),
                ceil_tol(1.0 / f_base.sqrt()),
            ),
            Regime::LowOutdeg => {
                let g = self.gamma.expect("validated");
                (ceil_tol((n0 * g).sqrt() / a), ceil_tol(g))
            }
        };
        let level2 = ceil_tol(self.c_gap * self.eta * n0 * f_base / (a * a));
        let (l1, fan, level2) = (l1 as usize, fan as usize, level2 as usize);
        let base = 4 + 2 * l1 * fan + 2 * l1 + level2;
        let padded = match self.regime {
            Regime::HighOutdeg => base,
            Regime::LowOutdeg => {
                let target = ceil_tol((16.0 + 2.0 * self.c_gap * self.eta) * n0 / (a * a)) as usize;
                target.max(base)
            }
        };
        let n = padded + 2 * chain_k as usize;
        if n > NodeId::MAX as usize {
            return Err(GraphError::TooManyNodes(n));
        }
        Ok(FamilyLayout {
            level1_per_side: l1,
            fan_out: fan,
            level2,
            isolated: padded - base,
            chain_k,
            f_base,
            n,
        })
    }
}

/// Level sizes of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyLayout {
    /// Level-1 nodes per side, excluding `s_u`/`s_v`.
    pub level1_per_side: usize,
    /// Level-0 children of each level-1 node besides `u` or `v`.
    pub fan_out: usize,
    pub level2: usize,
    pub isolated: usize,
    pub chain_k: u32,
    /// Score level the unchained part is built for.
    pub f_base: f64,
    pub n: usize,
}

impl FamilyLayout {
    /// Node count before padding and chains.
    pub fn base_nodes(&self) -> usize {
        4 + 2 * self.level1_per_side * self.fan_out + 2 * self.level1_per_side + self.level2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    U,
    V,
    SU,
    SV,
    /// Level-1 node pointing at `u`.
    Level1U,
    /// Level-1 node pointing at `v`.
    Level1V,
    Level0,
    Level2,
    /// `z_u^i`, 1-based depth.
    ChainU(u32),
    ChainV(u32),
    Isolated,
}

#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: DirectedGraph,
    pub u: NodeId,
    pub v: NodeId,
    pub s_u: NodeId,
    pub s_v: NodeId,
    /// Designated pair: `(u, v)` without chains, `(z_u^k, z_v^k)` with.
    pub targets: (NodeId, NodeId),
    pub roles: Vec<NodeRole>,
    pub layout: FamilyLayout,
}

/// Builds the instance for `spec` and relabels it with a seeded permutation.
pub fn gen_lower_bound_family(spec: &LowerBoundFamilySpec) -> Result<LabeledGraph, GraphError> {
    let lay = spec.layout()?;
    let (l1, fan, k) = (lay.level1_per_side, lay.fan_out, lay.chain_k as usize);

    // canonical ids before permutation
    let (u, v, s_u, s_v) = (0usize, 1usize, 2usize, 3usize);
    let level1 = 4;
    let level0 = level1 + 2 * l1;
    let level2 = level0 + 2 * l1 * fan;
    let chain_u = level2 + lay.level2;
    let chain_v = chain_u + k;
    let isolated = chain_v + k;
    debug_assert_eq!(isolated + lay.isolated, lay.n);

    let mut roles = vec![NodeRole::Isolated; lay.n];
    roles[u] = NodeRole::U;
    roles[v] = NodeRole::V;
    roles[s_u] = NodeRole::SU;
    roles[s_v] = NodeRole::SV;

    let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(lay.n + 2 * l1 * fan);
    arcs.push((s_u, u));
    arcs.push((s_v, v));
    if k == 0 {
        arcs.push((u, u));
        arcs.push((v, v));
    }
    for j in 0..2 * l1 {
        let w = level1 + j;
        let root = if j < l1 { u } else { v };
        roles[w] = if j < l1 {
            NodeRole::Level1U
        } else {
            NodeRole::Level1V
        };
        arcs.push((w, root));
        for t in 0..fan {
            let z = level0 + fan * j + t;
            roles[z] = NodeRole::Level0;
            arcs.push((w, z));
            arcs.push((z, z));
        }
    }
    for i in 0..lay.level2 {
        roles[level2 + i] = NodeRole::Level2;
        arcs.push((level2 + i, s_u));
    }
    for (root, start, side) in [(u, chain_u, 0), (v, chain_v, 1)] {
        let mut prev = root;
        for i in 0..k {
            let z = start + i;
            roles[z] = if side == 0 {
                NodeRole::ChainU(i as u32 + 1)
            } else {
                NodeRole::ChainV(i as u32 + 1)
            };
            arcs.push((prev, z));
            prev = z;
        }
        if k > 0 {
            arcs.push((prev, prev));
        }
    }

    let mut perm: Vec<NodeId> = (0..lay.n as NodeId).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let graph = DirectedGraph::from_arcs(lay.n, arcs.into_iter().map(|(a, b)| (perm[a], perm[b])))?;
    let mut relabeled = vec![NodeRole::Isolated; lay.n];
    for (i, r) in roles.into_iter().enumerate() {
        relabeled[perm[i] as usize] = r;
    }
    let targets = if k == 0 {
        (perm[u], perm[v])
    } else {
        (perm[chain_u + k - 1], perm[chain_v + k - 1])
    };
    Ok(LabeledGraph {
        graph,
        u: perm[u],
        v: perm[v],
        s_u: perm[s_u],
        s_v: perm[s_v],
        targets,
        roles: relabeled,
        layout: lay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormScores {
    /// Score of the heavier designated node (`u` or `z_u^k`).
    pub p_u: f64,
    /// Score of the lighter designated node (`v` or `z_v^k`).
    pub p_v: f64,
    pub n: usize,
}

impl ClosedFormScores {
    pub fn relative_gap(&self) -> f64 {
        (self.p_u - self.p_v) / self.p_v
    }
}

/// Exact scores of the designated pair.
///
/// Isolated padding nodes are dangling and redistribute their mass
/// uniformly, which scales every score by `n / (n − α·D)` for `D` padding
/// nodes; the factor is 1 when there is no padding.
pub fn closed_form_scores(spec: &LowerBoundFamilySpec) -> Result<ClosedFormScores, GraphError> {
    let lay = spec.layout()?;
    let a = spec.alpha;
    let n = lay.n as f64;
    let l1 = lay.level1_per_side as f64;
    let fan = lay.fan_out as f64;
    let w2 = lay.level2 as f64;
    let head_v = 1.0 + a * (1.0 + l1 / (1.0 + fan));
    let head_u = head_v + a * a * w2;
    let k = lay.chain_k as i32;
    let prefix: f64 = (0..k).map(|i| a.powi(i)).sum();
    let scale = a.powi(k);
    let dangling = n / (n - a * lay.isolated as f64);
    Ok(ClosedFormScores {
        p_u: (prefix + scale * head_u) / n * dangling,
        p_v: (prefix + scale * head_v) / n * dangling,
        n: lay.n,
    })
}
