//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use localrank::bench::{run_bench, summarize, Arm, BenchPlan};
use localrank::graph::{
    closed_form_scores, gen_lower_bound_family, gen_random_graph, DirectedGraph,
    LowerBoundFamilySpec, NodeId, Regime,
};
use localrank::local::run_estimator;
use localrank::oracle::{exact_pagerank, hit_target, DEFAULT_TOL};
use localrank::par::{map_indexed, Execution};
use localrank::sampler::{estimate_score_direct, estimate_size, sample_node};
use localrank::verify::{self, VerifyOptions};
use localrank::{EstimatorConfig, Mode, QuerySession};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let pass = out.pass && in_time;
    let limit_txt = limit
        .map(|l| format!(" limit {}s", l.as_secs()))
        .unwrap_or_default();
    println!(
        "criterion {id:>2} {} {name}: {} [{:.1}s{limit_txt}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64()
    );
    pass
}

fn exec() -> Execution {
    Execution::auto()
}

fn identity_suites() -> [(u32, &'static str, Vec<&'static str>); 3] {
    [
        (1, "decomposition identity", vec!["decomposition"]),
        (2, "expectation identity", vec!["expectation"]),
        (3, "balance and lazy scaling", vec!["balance", "scratch"]),
    ]
}

fn run_identity(names: &[&str]) -> Outcome {
    let opts = VerifyOptions {
        seed: 2024,
        cases: 200,
        ..Default::default()
    };
    let reports: Vec<_> = names
        .iter()
        .map(|&n| match n {
            "decomposition" => verify::decomposition_suite(&opts),
            "expectation" => verify::expectation_suite(&opts),
            "balance" => verify::balance_suite(&opts),
            _ => verify::scratch_suite(&opts),
        })
        .collect();
    let pass = reports.iter().all(|r| r.ok() && r.cases >= 200);
    let detail = reports
        .iter()
        .map(|r| {
            let mut s = format!(
                "{} {}/{} max_err={:.2e}",
                r.name, r.passed, r.cases, r.max_error
            );
            if let Some(f) = r.failures.first() {
                s.push_str(&format!(" ({f})"));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn sampler_distribution() -> Outcome {
    const DRAWS: usize = 1_000_000;
    let mut worst_p: f64 = 1.0;
    let mut worst_rate: f64 = 0.0;
    let mut pass = true;
    for alpha in [0.5, 0.85] {
        let results = map_indexed(exec(), 10, |i| {
            let g = gen_random_graph(50, 3.0, 6, 100 + i as u64).unwrap();
            let p = exact_pagerank(&g, alpha, DEFAULT_TOL);
            let mut s = QuerySession::new(&g, 7 + i as u64);
            let mut counts = vec![0u64; 50];
            for _ in 0..DRAWS {
                counts[sample_node(&mut s, alpha).unwrap().node as usize] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(&p.scores)
                .map(|(&o, &q)| {
                    let e = q * DRAWS as f64;
                    (o as f64 - e).powi(2) / e
                })
                .sum();
            let pval = ChiSquared::new(49.0).unwrap().sf(stat);
            (pval, s.counts().total as f64 / DRAWS as f64)
        });
        for (pval, rate) in results {
            worst_p = worst_p.min(pval);
            pass &= pval >= 1e-6 && rate < 2.0 / (1.0 - alpha);
            worst_rate = worst_rate.max(rate * (1.0 - alpha) / 2.0);
        }
    }
    Outcome {
        pass,
        detail: format!(
            "20 graph/alpha pairs, min chi-square p={worst_p:.3e} (need >= 1e-6), max queries per call {:.3} of 2/(1-a)",
            worst_rate
        ),
    }
}

fn direct_estimator() -> Outcome {
    let star = DirectedGraph::from_arcs(3, [(0, 0), (1, 0), (2, 0)]).unwrap();
    // the lightest node with score at least 0.05 on a sparse random graph
    let small = gen_random_graph(20, 2.0, 4, 5).unwrap();
    let alpha = 0.5;
    let ps = exact_pagerank(&small, alpha, DEFAULT_TOL);
    let low = small
        .nodes()
        .filter(|&u| ps.get(u) >= 0.05)
        .min_by(|a, b| ps.get(*a).total_cmp(&ps.get(*b)))
        .expect("a node with score at least 0.05");
    let star_p = exact_pagerank(&star, alpha, DEFAULT_TOL);
    let cases: Vec<(&DirectedGraph, NodeId, f64)> = vec![
        (&star, 0, star_p.get(0)),
        (&star, 1, star_p.get(1)),
        (&small, low, ps.get(low)),
    ];
    let (eps, delta) = (0.1, 0.1);
    let h = hit_target(eps, delta) as f64;
    let runs = 200;
    let sigma = (delta * (1.0 - delta) / runs as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (g, v, truth) in cases {
        let est = map_indexed(exec(), runs, |t| {
            let mut s = QuerySession::new(g, 5000 + t as u64);
            estimate_score_direct(&mut s, v, alpha, eps, delta)
                .unwrap()
                .estimate
        });
        let fails = est
            .iter()
            .filter(|&&e| (e / truth - 1.0).abs() > eps)
            .count();
        let rate = fails as f64 / runs as f64;
        // the run stops at exactly H hits, so draws = H / estimate
        let mean_draws = est.iter().map(|&e| h / e).sum::<f64>() / runs as f64;
        let ratio = mean_draws / (h / truth);
        pass &= rate <= delta + 3.0 * sigma && (0.8..=1.2).contains(&ratio);
        parts.push(format!(
            "P={truth:.3} fail={rate:.3} draws/(H/P)={ratio:.3}"
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "{}; fail limit {:.3}",
            parts.join("; "),
            delta + 3.0 * sigma
        ),
    }
}

/// Ceiling that treats values within 1e-9 of an integer as that integer.
fn ceil_eps(x: f64) -> usize {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    v.max(0.0) as usize
}

/// Node count from the construction rules, independent of the generator.
fn expected_size(s: &LowerBoundFamilySpec) -> usize {
    let n0 = s.n0 as f64;
    let a = s.alpha;
    let thr = match s.regime {
        Regime::HighOutdeg => n0.powf(-2.0 / 3.0),
        Regime::LowOutdeg => (n0 * s.gamma.unwrap()).powf(-0.5),
    };
    let k = if s.f < thr {
        ceil_eps((s.f / thr).ln() / a.ln()).max(1)
    } else {
        0
    };
    let fb = if k > 0 { thr } else { s.f };
    let (l, d) = match s.regime {
        Regime::HighOutdeg => (ceil_eps(n0 * fb.sqrt() / a), ceil_eps(1.0 / fb.sqrt())),
        Regime::LowOutdeg => {
            let g = s.gamma.unwrap();
            (ceil_eps((n0 * g).sqrt() / a), ceil_eps(g))
        }
    };
    let w2 = ceil_eps(s.c_gap * s.eta * n0 * fb / (a * a));
    let base = 4 + 2 * l + 2 * l * d + w2;
    let padded = match s.regime {
        Regime::HighOutdeg => base,
        Regime::LowOutdeg => base.max(ceil_eps((16.0 + 2.0 * s.c_gap * s.eta) * n0 / (a * a))),
    };
    padded + 2 * k
}

fn random_spec(rng: &mut ChaCha8Rng, regime: Regime, chained: bool) -> LowerBoundFamilySpec {
    let n0 = rng.random_range(30..=200u64);
    let alpha = rng.random_range(0.4..0.7);
    let eta = rng.random_range(0.25..2.0);
    let c_min = f64::max(4.0, 2.0 + 1.0 / (alpha * (1.0 - alpha)));
    let c = c_min * rng.random_range(1.0..1.5);
    let nf = n0 as f64;
    let (gamma, thr) = match regime {
        Regime::HighOutdeg => (None, nf.powf(-2.0 / 3.0)),
        Regime::LowOutdeg => {
            let g = rng.random_range(1.0..=nf.cbrt());
            (Some(g), (nf * g).powf(-0.5))
        }
    };
    // log-uniform f on [1/n0, thr) or [thr, 1]
    let (lo, hi) = if chained {
        (1.0 / nf, thr * 0.999)
    } else {
        (thr, 1.0)
    };
    let f = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    LowerBoundFamilySpec {
        n0,
        alpha,
        eta,
        c_gap: c,
        regime,
        f,
        gamma,
        chain_k: None,
        seed: rng.random(),
    }
}

fn family_generators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut specs = Vec::new();
    for regime in [Regime::HighOutdeg, Regime::LowOutdeg] {
        for i in 0..50 {
            specs.push(random_spec(&mut rng, regime, i % 2 == 0));
        }
    }
    let results = map_indexed(exec(), specs.len(), |i| {
        let s = &specs[i];
        let fam = gen_lower_bound_family(s).unwrap();
        let cf = closed_form_scores(s).unwrap();
        let p = exact_pagerank(&fam.graph, s.alpha, DEFAULT_TOL);
        let (a, b) = fam.targets;
        let size_ok = fam.graph.node_count() == expected_size(s);
        let err = (cf.p_u - p.get(a)).abs().max((cf.p_v - p.get(b)).abs());
        let gap = (p.get(a) - p.get(b)) / p.get(b);
        (size_ok, err, gap > s.eta, fam.layout.chain_k > 0)
    });
    let sizes = results.iter().filter(|r| r.0).count();
    let max_err = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let gaps = results.iter().filter(|r| r.2).count();
    let chained = results.iter().filter(|r| r.3).count();
    Outcome {
        pass: sizes == 100 && max_err <= 1e-8 && gaps == 100 && chained > 0 && chained < 100,
        detail: format!(
            "100 specs ({chained} chained): sizes {sizes}/100, closed form max_err={max_err:.2e}, gap > eta {gaps}/100"
        ),
    }
}

fn scaling() -> (Outcome, Outcome) {
    let plan = BenchPlan {
        arms: vec![
            Arm {
                mode: Mode::Local,
                known_outdegrees: false,
            },
            Arm {
                mode: Mode::Local,
                known_outdegrees: true,
            },
        ],
        ..Default::default()
    };
    let rows = run_bench(&plan, exec()).unwrap();
    let s = summarize(&rows);
    let unknown = s.mode("local").unwrap();
    let known = s.mode("local-known").unwrap();
    let med = |m: &localrank::bench::ModeSummary| {
        m.cells
            .iter()
            .map(|c| format!("{}:{:.0}", c.n, c.median_queries))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let su = unknown.slope.unwrap();
    let sk = known.slope.unwrap();
    let sub = unknown.cells.iter().all(|c| c.median_queries < c.n as f64);
    let below = known
        .cells
        .iter()
        .zip(&unknown.cells)
        .all(|(k, u)| k.median_queries < u.median_queries);
    (
        Outcome {
            pass: (0.52..=0.82).contains(&su) && sub,
            detail: format!(
                "slope {su:.3} in [0.52, 0.82], medians {} all < n: {sub}",
                med(unknown)
            ),
        },
        Outcome {
            pass: (0.4..=0.65).contains(&sk) && below,
            detail: format!(
                "slope {sk:.3} in [0.4, 0.65], medians {} below unknown: {below}",
                med(known)
            ),
        },
    )
}

fn size_estimator() -> Outcome {
    let n = 100_000usize;
    let g = DirectedGraph::empty(n);
    let target = EstimatorConfig::default().target_collisions;
    let res = map_indexed(exec(), 100, |t| {
        let mut s = QuerySession::new(&g, 900 + t as u64);
        let e = estimate_size(&mut s, target).unwrap();
        assert_eq!(s.counts().random_node, e.samples_used);
        e
    });
    let within = res
        .iter()
        .filter(|e| (e.n_hat as f64 / n as f64 - 1.0).abs() <= 0.25)
        .count();
    let cap = 4.0 * ((n * 32) as f64).sqrt();
    let max_draws = res.iter().map(|e| e.samples_used).max().unwrap();
    Outcome {
        pass: within >= 90 && max_draws as f64 <= cap,
        detail: format!(
            "{within}/100 within 25% at {target} collisions, max draws {max_draws} <= {cap:.0}"
        ),
    }
}

fn accuracy_rate(g: &DirectedGraph, targets: &[(NodeId, f64)], cfg: &EstimatorConfig) -> usize {
    let ok = map_indexed(exec(), 100, |t| {
        let (v, truth) = targets[t % targets.len()];
        let mut s = QuerySession::new(g, 7000 + t as u64);
        let a = run_estimator(&mut s, v, cfg).unwrap();
        (a.estimate.estimate / truth - 1.0).abs() <= 0.2
    });
    ok.into_iter().filter(|&b| b).count()
}

fn accuracy_at_scale() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let spec = LowerBoundFamilySpec::high(100, 0.01, 0.5, 1.0, 4.0, 11).with_chain(0);
    let fam = gen_lower_bound_family(&spec).unwrap();
    let cf = closed_form_scores(&spec).unwrap();
    for (label, v, truth) in [("v", fam.v, cf.p_v), ("u", fam.u, cf.p_u)] {
        for known in [true, false] {
            let cfg = EstimatorConfig {
                alpha: 0.5,
                epsilon: 0.2,
                n_known: known.then_some(460),
                ..Default::default()
            };
            let ok = accuracy_rate(&fam.graph, &[(v, truth)], &cfg);
            pass &= ok >= 80;
            let n_txt = if known { "n known" } else { "n estimated" };
            parts.push(format!("family {label} {n_txt} {ok}/100"));
        }
    }
    for (avg, max) in [(5.0, 10usize), (8.0, 20)] {
        let n = 10_000;
        let cfg = EstimatorConfig {
            epsilon: 0.2,
            ..Default::default()
        };
        let g = gen_random_graph(n, avg, max, 3).unwrap();
        let p = exact_pagerank(&g, cfg.alpha, DEFAULT_TOL);
        let targets: Vec<(NodeId, f64)> = g
            .nodes()
            .filter(|&u| (1.0..=4.0).contains(&(p.get(u) * n as f64)))
            .take(5)
            .map(|u| (u, p.get(u)))
            .collect();
        let ok = accuracy_rate(&g, &targets, &cfg);
        pass &= ok >= 80;
        parts.push(format!("random avg {avg} max {max} {ok}/100"));
    }
    Outcome {
        pass,
        detail: format!("{} (need >= 80 each)", parts.join("; ")),
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let limits = [10, 60, 60];
    for ((id, name, suites), secs) in identity_suites().into_iter().zip(limits) {
        all &= check(id, name, Some(Duration::from_secs(secs)), || {
            run_identity(&suites)
        });
    }
    all &= check(
        4,
        "sampler distribution",
        Some(Duration::from_secs(300)),
        sampler_distribution,
    );
    all &= check(5, "direct estimator", None, direct_estimator);
    all &= check(
        6,
        "family generators",
        Some(Duration::from_secs(120)),
        family_generators,
    );
    // both criteria come from one bench run over the two arms
    let mut c8 = None;
    all &= check(
        7,
        "sublinear scaling",
        Some(Duration::from_secs(1800)),
        || {
            let (c7, known) = scaling();
            c8 = Some(known);
            c7
        },
    );
    all &= check(8, "known-outdegree speedup", None, || c8.unwrap());
    all &= check(9, "size estimator", None, size_estimator);
    all &= check(10, "accuracy at scale", None, accuracy_at_scale);
    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria fail");
        ExitCode::FAILURE
    }
}
