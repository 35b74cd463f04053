use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::{DirectedGraph, GraphError, NodeId};

/// Random simple digraph: each node draws its outdegree from
/// `Binomial(max_outdeg, avg_outdeg / max_outdeg)` and then that many
/// distinct children uniformly (self-loops allowed).
pub fn gen_random_graph(
    n: usize,
    avg_outdeg: f64,
    max_outdeg: usize,
    seed: u64,
) -> Result<DirectedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("n must be at least 1".into()));
    }
    if !(avg_outdeg >= 0.0 && avg_outdeg <= max_outdeg as f64 && max_outdeg <= n) {
        return Err(GraphError::InvalidParameter(format!(
            "need 0 <= avg_outdeg ({avg_outdeg}) <= max_outdeg ({max_outdeg}) <= n ({n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = if max_outdeg == 0 {
        None
    } else {
        let p = (avg_outdeg / max_outdeg as f64).clamp(0.0, 1.0);
        Some(Binomial::new(max_outdeg as u64, p).expect("valid binomial"))
    };
    let mut arcs: Vec<(NodeId, NodeId)> = Vec::with_capacity((n as f64 * avg_outdeg) as usize);
    for u in 0..n {
        let d = match &degree {
            Some(b) => b.sample(&mut rng) as usize,
            None => 0,
        };
        if d == 0 {
            continue;
        }
        let mut kids: Vec<NodeId> = index::sample(&mut rng, n, d)
            .into_iter()
            .map(|w| w as NodeId)
            .collect();
        kids.sort_unstable();
        arcs.extend(kids.into_iter().map(|w| (u as NodeId, w)));
    }
    // consume one more value so that streams of different n never align
    let _: u64 = rng.random();
    DirectedGraph::from_arcs(n, arcs)
}
