use statrs::distribution::{ContinuousCDF, Gamma};

use localrank::oracle::{exact_pagerank, hit_target, DEFAULT_TOL};
use localrank::sampler::{
    estimate_dangling_mass, estimate_score_direct, estimate_size, sample_node, sample_node_via,
    ChildAccess, SampleBatch,
};
use localrank::{DirectedGraph, QuerySession};

fn star() -> DirectedGraph {
    DirectedGraph::from_arcs(3, [(0, 0), (1, 0), (2, 0)]).unwrap()
}

#[test]
fn random_node_is_uniform() {
    let g = DirectedGraph::empty(4);
    let mut s = QuerySession::new(&g, 1);
    let draws = 100_000;
    let mut counts = [0u32; 4];
    for _ in 0..draws {
        counts[s.random_node().unwrap() as usize] += 1;
    }
    for c in counts {
        assert!((c as f64 / draws as f64 - 0.25).abs() <= 0.01, "{counts:?}");
    }
    assert_eq!(s.counts().random_node, draws);
}

#[test]
fn random_child_is_uniform() {
    let g = DirectedGraph::from_arcs(3, [(0, 1), (0, 2)]).unwrap();
    let mut s = QuerySession::new(&g, 2);
    s.reveal_input(0).unwrap();
    let draws = 20_000;
    let ones = (0..draws)
        .filter(|_| s.random_child(0).unwrap() == Some(1))
        .count();
    assert!((ones as f64 / draws as f64 - 0.5).abs() <= 0.02);
}

#[test]
fn star_draws_match_scores() {
    let g = star();
    for alpha in [0.5, 0.85] {
        let p = exact_pagerank(&g, alpha, DEFAULT_TOL);
        let mut s = QuerySession::new(&g, 11);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[sample_node(&mut s, alpha).unwrap().node as usize] += 1;
        }
        for (u, &c) in counts.iter().enumerate() {
            let q = p.scores[u];
            let sigma = (q * (1.0 - q) / draws as f64).sqrt();
            assert!(
                (c as f64 / draws as f64 - q).abs() <= 3.0 * sigma,
                "alpha {alpha} node {u}"
            );
        }
    }
}

#[test]
fn neighbourhood_walk_matches_child_walk() {
    let g = DirectedGraph::from_arcs(4, [(0, 1), (0, 2), (1, 2), (2, 0), (3, 3)]).unwrap();
    let alpha = 0.7;
    let p = exact_pagerank(&g, alpha, DEFAULT_TOL);
    let mut s = QuerySession::new(&g, 4);
    let draws = 200_000usize;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[sample_node_via(&mut s, alpha, ChildAccess::Neighbourhood)
            .unwrap()
            .node as usize] += 1;
    }
    for (u, &c) in counts.iter().enumerate() {
        let q = p.scores[u];
        let sigma = (q * (1.0 - q) / draws as f64).sqrt();
        assert!((c as f64 / draws as f64 - q).abs() <= 4.0 * sigma);
    }
    // children come from cached neighbourhoods, never from random_child
    let c = s.counts();
    assert_eq!(c.random_child, 0);
    assert!(c.neighbourhood <= 4);
}

#[test]
fn walk_length_has_geometric_tail() {
    // no dangling nodes, so each call costs 1 + Geometric(1 - alpha) queries
    let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2), (2, 0), (2, 1)]).unwrap();
    let alpha = 0.85;
    let mut s = QuerySession::new(&g, 9);
    let draws = 200_000usize;
    let lens: Vec<u64> = (0..draws)
        .map(|_| sample_node(&mut s, alpha).unwrap().queries)
        .collect();
    let mean = lens.iter().sum::<u64>() as f64 / draws as f64;
    assert!((mean - 1.0 / (1.0 - alpha)).abs() < 0.05);
    for t in [5u64, 10, 20, 40] {
        let tail = lens.iter().filter(|&&q| q > t).count() as f64 / draws as f64;
        let bound = alpha.powi(t as i32);
        let sigma = (bound * (1.0 - bound) / draws as f64).sqrt();
        assert!(tail <= bound + 4.0 * sigma, "t {t}: {tail} vs {bound}");
    }
}

#[test]
fn direct_estimate_on_star() {
    let g = star();
    let alpha = 0.5;
    let truth = exact_pagerank(&g, alpha, DEFAULT_TOL).get(0);
    let mut s = QuerySession::new(&g, 5);
    let e = estimate_score_direct(&mut s, 0, alpha, 0.1, 0.1).unwrap();
    assert!(e.converged);
    assert!((e.estimate / truth - 1.0).abs() <= 0.1);
    // the run stops at the hit target, so estimate = hits / draws exactly
    let draws = e.queries.random_node;
    assert!((e.estimate - hit_target(0.1, 0.1) as f64 / draws as f64).abs() < 1e-12);
}

#[test]
fn dangling_mass_of_two_node_path() {
    let g = DirectedGraph::from_arcs(2, [(0, 1)]).unwrap();
    let alpha = 0.5;
    let p = exact_pagerank(&g, alpha, DEFAULT_TOL);
    let mut s = QuerySession::new(&g, 8);
    s.reveal_input(0).unwrap();
    let batch = SampleBatch::collect(&mut s, alpha, 100_000).unwrap();
    let x = estimate_dangling_mass(&batch, &mut s, 0).unwrap();
    assert!((x - p.get(1)).abs() < 0.01, "{x} vs {}", p.get(1));
    assert_eq!(estimate_dangling_mass(&batch, &mut s, 1).unwrap(), 0.0);
}

/// Fraction of runs within 25% when collision times are Gamma(c, 1).
fn gamma_prediction(c: u64) -> f64 {
    let g = Gamma::new(c as f64, 1.0).unwrap();
    let c = c as f64;
    g.cdf(1.25 * c) - g.cdf(0.75 * c)
}

fn size_hit_rate(n: usize, collisions: u64, trials: u64) -> f64 {
    let g = DirectedGraph::empty(n);
    let ok = (0..trials)
        .filter(|&t| {
            let mut s = QuerySession::new(&g, 300 + t);
            let e = estimate_size(&mut s, collisions).unwrap();
            (e.n_hat as f64 / n as f64 - 1.0).abs() <= 0.25
        })
        .count();
    ok as f64 / trials as f64
}

#[test]
fn size_estimate_tracks_gamma_prediction() {
    let trials = 1000;
    let rate = size_hit_rate(10_000, 32, trials);
    let want = gamma_prediction(32);
    let sigma = (want * (1.0 - want) / trials as f64).sqrt();
    assert!((rate - want).abs() <= 4.0 * sigma, "{rate} vs {want}");
    // 32 collisions cannot reach 90% within 25%
    assert!(want < 0.9);
}

#[test]
fn size_estimate_at_default_target() {
    assert!(gamma_prediction(64) > 0.94);
    assert!(size_hit_rate(10_000, 64, 200) >= 0.9);
}
