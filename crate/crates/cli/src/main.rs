use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use localrank::bench::{read_rows_csv, run_bench, summarize, write_rows_csv, Arm, BenchPlan};
use localrank::graph::{
    closed_form_scores, gen_lower_bound_family, gen_random_graph, read_edge_list_file,
    write_edge_list, LowerBoundFamilySpec,
};
use localrank::local::{run_estimator, OutdegreeBounds};
use localrank::oracle::{exact_pagerank, DEFAULT_TOL};
use localrank::par::Execution;
use localrank::verify::{run_all, VerifyOptions};
use localrank::{EstimatorConfig, Mode, QuerySession};

#[derive(Parser)]
#[command(
    name = "localrank",
    version,
    about = "Local PageRank estimation with metered graph queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a lower-bound family or a random graph.
    Gen(GenArgs),
    /// Estimate the score of one node.
    Estimate(EstimateArgs),
    /// Run a trial grid and write per-trial rows.
    Bench(BenchArgs),
    /// Summarize per-trial rows.
    Summarize(SummarizeArgs),
    /// Run the deterministic identity suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    HighOutdeg,
    LowOutdeg,
}

#[derive(Args)]
struct GenArgs {
    /// Build a lower-bound family.
    #[arg(long, value_enum, conflicts_with = "random")]
    family: Option<FamilyKind>,
    #[arg(long)]
    n0: Option<u64>,
    /// Target score level at n0.
    #[arg(long)]
    f: Option<f64>,
    /// Outdegree budget (low-outdeg families).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 4.0)]
    c_gap: f64,
    /// Chain length, or `auto` to derive it from f.
    #[arg(long, default_value = "0", value_parser = parse_chain)]
    chain_k: ChainK,
    /// Build a random graph.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    avg_deg: Option<f64>,
    #[arg(long)]
    max_deg: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge-list output; the sidecar goes next to it with a .json suffix.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Local,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Local => Mode::Local,
            ModeArg::Hybrid => Mode::Hybrid,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    node: u32,
    /// JSON estimator configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    n_known: Option<u64>,
    #[arg(long, requires = "outdeg_max")]
    outdeg_min: Option<u32>,
    #[arg(long, requires = "outdeg_min")]
    outdeg_max: Option<u32>,
    #[arg(long)]
    c_budget: Option<f64>,
    #[arg(long)]
    c_guess: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    query_cap: Option<u64>,
    /// Also compute the exact score by power iteration.
    #[arg(long)]
    truth: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench plan; flags override its fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Comma-separated arms: direct, local, hybrid, local-known, ...
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_deg: Option<usize>,
    #[arg(long)]
    avg_deg: Option<f64>,
    /// Run trials one at a time.
    #[arg(long)]
    sequential: bool,
    /// Per-trial rows (CSV).
    #[arg(long, short)]
    out: PathBuf,
    /// Summary (JSON); printed to stdout when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Per-trial rows written by `bench`.
    input: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long)]
    json: bool,
    #[arg(long, hide = true, default_value_t = 0.0)]
    corrupt_beta: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Verify(a) => return cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[derive(Clone, Copy)]
struct ChainK(Option<u32>);

fn parse_chain(s: &str) -> Result<ChainK, String> {
    if s == "auto" {
        Ok(ChainK(None))
    } else {
        s.parse()
            .map(|k| ChainK(Some(k)))
            .map_err(|e| format!("{e}"))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let (graph, sidecar) = if let Some(kind) = a.family {
        let n0 = a.n0.context("--n0 is required with --family")?;
        let f = a.f.context("--f is required with --family")?;
        let mut spec = match kind {
            FamilyKind::HighOutdeg => {
                let mut s = LowerBoundFamilySpec::high(n0, f, a.alpha, a.eta, a.c_gap, a.seed);
                s.gamma = a.gamma;
                s
            }
            FamilyKind::LowOutdeg => {
                let g = a
                    .gamma
                    .context("--gamma is required for low-outdeg families")?;
                LowerBoundFamilySpec::low(n0, f, g, a.alpha, a.eta, a.c_gap, a.seed)
            }
        };
        spec.chain_k = a.chain_k.0;
        let fam = gen_lower_bound_family(&spec)?;
        let scores = closed_form_scores(&spec)?;
        let side = json!({
            "kind": "family",
            "spec": spec,
            "n": fam.graph.node_count(),
            "u": fam.u,
            "v": fam.v,
            "s_u": fam.s_u,
            "s_v": fam.s_v,
            "targets": [fam.targets.0, fam.targets.1],
            "p_u": scores.p_u,
            "p_v": scores.p_v,
            "relative_gap": scores.relative_gap(),
            "layout": fam.layout,
        });
        (fam.graph, side)
    } else if a.random {
        let n = a.n.context("--n is required with --random")?;
        let avg = a.avg_deg.context("--avg-deg is required with --random")?;
        let max = a.max_deg.context("--max-deg is required with --random")?;
        let g = gen_random_graph(n, avg, max, a.seed)?;
        let side = json!({
            "kind": "random",
            "n": n,
            "avg_deg": avg,
            "max_deg": max,
            "seed": a.seed,
            "arcs": g.arc_count(),
        });
        (g, side)
    } else {
        bail!("choose --family or --random");
    };
    let mut w = create(&a.out)?;
    write_edge_list(&graph, &mut w)?;
    w.flush()?;
    let side_path = sidecar_path(&a.out);
    let mut s = create(&side_path)?;
    serde_json::to_writer_pretty(&mut s, &sidecar)?;
    writeln!(s)?;
    s.flush()?;
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let mut cfg: EstimatorConfig = match &a.config {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            serde_json::from_reader(f).with_context(|| format!("bad config {}", p.display()))?
        }
        None => EstimatorConfig::default(),
    };
    if let Some(x) = a.alpha {
        cfg.alpha = x;
    }
    if let Some(x) = a.epsilon {
        cfg.epsilon = x;
    }
    if let Some(x) = a.delta {
        cfg.delta = x;
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if a.n_known.is_some() {
        cfg.n_known = a.n_known;
    }
    if let (Some(min), Some(max)) = (a.outdeg_min, a.outdeg_max) {
        cfg.outdeg_bounds = Some(OutdegreeBounds::Uniform { min, max });
    }
    if let Some(x) = a.c_budget {
        cfg.c_budget = x;
    }
    if let Some(x) = a.c_guess {
        cfg.c_guess = x;
    }
    if a.query_cap.is_some() {
        cfg.query_cap = a.query_cap;
    }
    cfg.validate()?;

    let g = read_edge_list_file(&a.graph)?;
    if a.node as usize >= g.node_count() {
        bail!("node {} not in graph with {} nodes", a.node, g.node_count());
    }
    let mut session = QuerySession::new(&g, a.seed).with_cap(cfg.query_cap);
    let mut art = run_estimator(&mut session, a.node, &cfg)?;
    if a.truth {
        art.truth = Some(exact_pagerank(&g, cfg.alpha, DEFAULT_TOL).get(a.node));
    }
    let mut out = io::stdout().lock();
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &art)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let q = art.estimate.queries;
            let opt = |x: Option<f64>| x.map(|t| t.to_string()).unwrap_or_default();
            writeln!(
                out,
                "node,estimate,epsilon,delta,method,converged,random_node,random_child,neighbourhood,total,truth,rel_err"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                art.estimate.node,
                art.estimate.estimate,
                art.estimate.epsilon,
                art.estimate.delta,
                serde_json::to_value(art.estimate.method)?
                    .as_str()
                    .unwrap_or(""),
                art.estimate.converged,
                q.random_node,
                q.random_child,
                q.neighbourhood,
                q.total,
                opt(art.truth),
                opt(art.rel_err()),
            )?;
        }
    }
    Ok(())
}

fn parse_arm(s: &str) -> Result<Arm> {
    let (mode, known) = match s.strip_suffix("-known") {
        Some(m) => (m, true),
        None => (s, false),
    };
    let mode = match mode {
        "direct" => Mode::Direct,
        "local" => Mode::Local,
        "hybrid" => Mode::Hybrid,
        _ => bail!("unknown mode {s:?}"),
    };
    Ok(Arm {
        mode,
        known_outdegrees: known,
    })
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut plan: BenchPlan = match &a.plan {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            serde_json::from_reader(f).with_context(|| format!("bad plan {}", p.display()))?
        }
        None => BenchPlan::default(),
    };
    if let Some(s) = a.sizes {
        plan.sizes = s;
    }
    if let Some(m) = a.modes {
        plan.arms = m.iter().map(|s| parse_arm(s)).collect::<Result<_>>()?;
    }
    if let Some(t) = a.trials {
        plan.trials = t;
    }
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(d) = a.max_deg {
        plan.max_outdeg = d;
    }
    if let Some(d) = a.avg_deg {
        plan.avg_outdeg = d;
    }
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::auto()
    };
    let rows = run_bench(&plan, exec)?;
    let mut w = create(&a.out)?;
    write_rows_csv(&rows, &mut w)?;
    w.flush()?;
    write_summary(&summarize(&rows), a.summary.as_deref())
}

fn write_summary(s: &localrank::bench::BenchSummary, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, s)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut o = io::stdout().lock();
            serde_json::to_writer_pretty(&mut o, s)?;
            writeln!(o)?;
        }
    }
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let f = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let rows = read_rows_csv(f)?;
    write_summary(&summarize(&rows), a.out.as_deref())
}

fn cmd_verify(a: VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        seed: a.seed,
        cases: a.cases,
        beta_distortion: a.corrupt_beta,
        ..Default::default()
    };
    let report = run_all(&opts);
    if a.json {
        match serde_json::to_string_pretty(&report) {
            Ok(s) => {
                let _ = writeln!(io::stdout().lock(), "{s}");
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    } else {
        let _ = write!(io::stdout().lock(), "{report}");
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
