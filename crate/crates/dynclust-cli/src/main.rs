//! `dynclust`: replay an edge stream through the incremental clustering
//! pipeline, or generate streams.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dynclust::gen;
use dynclust::graph::{clustering_cost, multi_source_dijkstra, DynGraph};
use dynclust::mpbi::{run_static, MpbiParams};
use dynclust::oracle::{brute_force_opt_with_budget, economy_scale, DEFAULT_BUDGET};
use dynclust::pipeline::{Pipeline, PipelineConfig, StepRecord};
use dynclust::stream::EdgeStream;
use dynclust::verify::{self, BicriteriaSnapshot, ReductionSnapshot};
use dynclust::weighted::{solve_static, WeightedInstance};
use dynclust::Error;
use log::info;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dynclust", version, about = "Incremental (k,z)-clustering on graphs under edge insertions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream and write one JSON line per step.
    Run(RunArgs),
    /// Write a synthetic edge stream.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Mode {
    /// The incremental pipeline.
    Incremental,
    /// Recompute the bicriteria solution and the clustering from scratch
    /// after every insertion.
    StaticBaseline,
    /// The incremental pipeline with every invariant checked per step.
    Verify,
    /// Per-update latencies of the pipeline against the static baseline,
    /// as one summary object.
    Bench,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "incremental")]
    mode: Mode,
    /// Stream file (`n <count>` then `e u v w` lines); `-` reads stdin.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Rounding for the bicriteria radii.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Rounding for the reduction weights and spanner classes.
    #[arg(long, default_value_t = 0.25)]
    eps_red: f64,
    #[arg(long, default_value_t = 2)]
    lambda: usize,
    #[arg(long)]
    deterministic_spanner: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    solve_every: usize,
    /// Compare every step against the brute-force optimum.
    #[arg(long)]
    oracle: bool,
    /// Subsets the oracle may enumerate per step.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    oracle_budget: u64,
    /// Steps of the static baseline timed in bench mode.
    #[arg(long, default_value_t = 200)]
    static_samples: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Spanning tree, then random insertions.
    TreeRandom,
    /// Erdős–Rényi edges in random order.
    Gnp,
    /// Two heavy clusters joined later by light cross edges.
    TwoCluster,
    /// Preferential attachment.
    PrefAttach,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "tree-random")]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    insertions: usize,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    wmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Default)]
struct Latency {
    /// Steps actually timed.
    measured: usize,
    /// Measured total, or the mean scaled to all steps when sampled.
    total_ms: f64,
    p50_us: u64,
    p90_us: u64,
    p99_us: u64,
    max_us: u64,
}

impl Latency {
    fn of(mut us: Vec<u64>, steps: usize) -> Self {
        if us.is_empty() {
            return Self::default();
        }
        us.sort_unstable();
        let q = |f: f64| us[((us.len() - 1) as f64 * f).round() as usize];
        let mean = us.iter().sum::<u64>() as f64 / us.len() as f64;
        Self {
            measured: us.len(),
            total_ms: mean * steps as f64 / 1e3,
            p50_us: q(0.5),
            p90_us: q(0.9),
            p99_us: q(0.99),
            max_us: *us.last().unwrap(),
        }
    }
}

#[derive(Serialize)]
struct BenchSummary {
    n: usize,
    steps: usize,
    incremental: Latency,
    static_baseline: Latency,
    /// Static total over incremental total.
    speedup: Option<f64>,
    resampling_phases: usize,
    sigma_inc: usize,
    restarts: usize,
    /// Counters over `log₂ n · log_{1+ε}(nW)`.
    c1: f64,
    c2: f64,
    delta_s_total: usize,
    solves: usize,
    s_size: usize,
    spanner_edges: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DYNCLUST_LOG")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(args) => run(&args),
        Command::Gen(args) => generate(&args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(Error::Parse { line, msg }) = e.downcast_ref::<Error>() {
                eprintln!("error: input line {line}: {msg}");
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_stream(path: &PathBuf) -> anyhow::Result<EdgeStream> {
    if path.as_os_str() == "-" {
        return Ok(EdgeStream::parse(io::stdin().lock())?);
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(EdgeStream::parse(BufReader::new(f))?)
}

fn pipeline_config(a: &RunArgs) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(a.k, a.z, a.seed);
    cfg.mpbi = MpbiParams { alpha: a.alpha, beta: a.beta, gamma: a.gamma, eps: a.eps, ..cfg.mpbi };
    cfg.reduction.eps = a.eps_red;
    cfg.reduction.lambda = a.lambda;
    cfg.reduction.deterministic_spanner = a.deterministic_spanner;
    cfg.solve_every = a.solve_every;
    cfg.evaluate_cost = true;
    cfg
}

fn with_oracle(rec: &mut StepRecord, g: &DynGraph, k: usize, z: f64, budget: u64) -> anyhow::Result<()> {
    let opt = brute_force_opt_with_budget(g, k, z, None, budget)?.opt;
    rec.opt = opt.is_finite().then_some(opt);
    rec.ratio = match (rec.cost_g, rec.opt) {
        (Some(c), Some(o)) if o > 0.0 => Some(c / o),
        (Some(c), Some(_)) if c == 0.0 => Some(1.0),
        _ => None,
    };
    Ok(())
}

fn emit(out: &mut dyn Write, rec: &StepRecord) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    writeln!(out)?;
    Ok(())
}

fn run(a: &RunArgs) -> anyhow::Result<()> {
    let stream = read_stream(&a.input)?;
    let g = DynGraph::new(stream.n)?;
    info!("{} vertices, {} insertions", stream.n, stream.len());
    let mut out = output(&a.out)?;
    match a.mode {
        Mode::StaticBaseline => static_baseline(a, &stream, &mut *out)?,
        Mode::Bench => bench(a, &stream, g, &mut *out)?,
        Mode::Incremental | Mode::Verify => incremental(a, &stream, g, &mut *out)?,
    }
    out.flush()?;
    Ok(())
}

fn incremental(a: &RunArgs, stream: &EdgeStream, g: DynGraph, out: &mut dyn Write) -> anyhow::Result<()> {
    let verify = a.mode == Mode::Verify;
    let (mut p, mut rec) = Pipeline::new(g, pipeline_config(a))?;
    let mut prev_b: Option<BicriteriaSnapshot> = None;
    let mut prev_r: Option<ReductionSnapshot> = None;
    for i in 0..=stream.len() {
        if i > 0 {
            let (u, v, w) = stream.edges[i - 1];
            rec = p.insert(u, v, w)?;
        }
        if a.oracle {
            with_oracle(&mut rec, p.graph(), a.k, a.z, a.oracle_budget)?;
        }
        if verify {
            check_step(&p, prev_b.as_ref(), prev_r.as_ref()).with_context(|| format!("invariant violated at step {i}"))?;
            prev_b = (!p.bicriteria().opt_infinite()).then(|| BicriteriaSnapshot::of(p.bicriteria()));
            prev_r = Some(ReductionSnapshot::of(p.reduction()));
        }
        emit(out, &rec)?;
    }
    Ok(())
}

fn check_step(p: &Pipeline, prev_b: Option<&BicriteriaSnapshot>, prev_r: Option<&ReductionSnapshot>) -> anyhow::Result<()> {
    let (b, g, r) = (p.bicriteria(), p.graph(), p.reduction());
    if r.counters().restarts != b.counters().sigma_inc {
        bail!("{} spanner restarts but σ_inc = {}", r.counters().restarts, b.counters().sigma_inc);
    }
    if b.opt_infinite() {
        return Ok(());
    }
    verify::check_bicriteria(b, g, prev_b)?;
    verify::check_assignment_cost(b, g)?;
    verify::check_level_oracles(b, g, false)?;
    verify::check_reduction(r, b, g, prev_r, false)?;
    if let Some(sp) = r.spanner() {
        verify::check_spanner(sp, g.distance_bound())?;
    }
    Ok(())
}

fn bench(a: &RunArgs, stream: &EdgeStream, g: DynGraph, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut cfg = pipeline_config(a);
    cfg.evaluate_cost = false;
    let (mut p, _) = Pipeline::new(g, cfg)?;
    let mut inc_us = Vec::with_capacity(stream.len());
    for &(u, v, w) in &stream.edges {
        let t = Instant::now();
        p.insert(u, v, w)?;
        inc_us.push(t.elapsed().as_micros() as u64);
    }
    // The baseline recomputes from scratch, so timing a sample of evenly
    // spaced steps is enough to estimate its total.
    let stride = stream.len().div_ceil(a.static_samples.max(1)).max(1);
    let mut static_us = Vec::new();
    let mut h = DynGraph::new(stream.n)?;
    for (i, &(u, v, w)) in stream.edges.iter().enumerate() {
        h.insert_edge(u, v, w)?;
        if (i + 1) % stride == 0 || i + 1 == stream.len() {
            let t = Instant::now();
            let (_, centers, _) = static_step(&h, a, &cfg.mpbi)?;
            clustering_cost(&h, &centers, a.z, None);
            static_us.push(t.elapsed().as_micros() as u64);
        }
    }
    let incremental = Latency::of(inc_us, stream.len());
    let static_baseline = Latency::of(static_us, stream.len());
    let speedup = (incremental.total_ms > 0.0).then(|| static_baseline.total_ms / incremental.total_ms);
    let (b, r, g) = (p.bicriteria(), p.reduction(), p.graph());
    let econ = economy_scale(g.n(), g.max_weight(), a.eps);
    let summary = BenchSummary {
        n: stream.n,
        steps: stream.len(),
        incremental,
        static_baseline,
        speedup,
        resampling_phases: b.counters().resampling_phases,
        sigma_inc: b.counters().sigma_inc,
        restarts: r.counters().restarts,
        c1: b.counters().resampling_phases as f64 / econ,
        c2: b.counters().sigma_inc as f64 / econ,
        delta_s_total: r.counters().delta_s_total,
        solves: r.counters().solves,
        s_size: b.solution_set().len(),
        spanner_edges: r.spanner().map_or(0, |s| s.num_edges()),
    };
    info!("bench speedup {:?}", summary.speedup);
    serde_json::to_writer(&mut *out, &summary)?;
    writeln!(out)?;
    Ok(())
}

/// Bicriteria from scratch, then the static solver on exact distances
/// between the bicriteria centers.
fn static_step(g: &DynGraph, a: &RunArgs, params: &MpbiParams) -> anyhow::Result<(usize, Vec<usize>, bool)> {
    let run = run_static(g, params)?;
    if run.opt_infinite {
        return Ok((run.s.len(), Vec::new(), true));
    }
    let weights: Vec<u64> = run.s.iter().map(|&s| run.sigma.count(s) as u64).collect();
    let mut edges = Vec::new();
    for (i, &x) in run.s.iter().enumerate() {
        let d = multi_source_dijkstra(g, &[x]).dist;
        for (j, &y) in run.s.iter().enumerate().skip(i + 1) {
            if d[y].is_finite() {
                edges.push((i, j, d[y]));
            }
        }
    }
    let inst = WeightedInstance::new(weights, edges, a.k, a.z)?;
    let sol = solve_static(&inst);
    Ok((run.s.len(), sol.centers.iter().map(|&i| run.s[i]).collect(), false))
}

fn static_baseline(a: &RunArgs, stream: &EdgeStream, out: &mut dyn Write) -> anyhow::Result<()> {
    let params = pipeline_config(a).mpbi;
    let mut g = DynGraph::new(stream.n)?;
    for step in 0..=stream.len() {
        let start = Instant::now();
        if step > 0 {
            let (u, v, w) = stream.edges[step - 1];
            g.insert_edge(u, v, w)?;
        }
        let (s_size, centers, opt_infinite) = static_step(&g, a, &params)?;
        let cost = clustering_cost(&g, &centers, a.z, None);
        let mut rec = StepRecord {
            step,
            s_size,
            sigma_inc: 0,
            delta_s: 0,
            spanner_edges: 0,
            c_size: centers.len(),
            cost_h: None,
            cost_g: cost.is_finite().then_some(cost),
            opt: None,
            ratio: None,
            first_decrease_level: 0,
            resampled: true,
            radii: Vec::new(),
            t: 0,
            opt_infinite,
            elapsed_us: 0,
        };
        if a.oracle {
            with_oracle(&mut rec, &g, a.k, a.z, a.oracle_budget)?;
        }
        rec.elapsed_us = start.elapsed().as_micros() as u64;
        emit(out, &rec)?;
    }
    Ok(())
}

fn generate(a: &GenArgs) -> anyhow::Result<()> {
    let stream = match a.kind {
        Kind::TreeRandom => gen::tree_then_random(a.n, a.insertions, a.wmax, a.seed)?,
        Kind::Gnp => gen::gnp(a.n, a.p, a.wmax, a.seed)?,
        Kind::TwoCluster => gen::two_cluster(a.n, a.insertions, a.wmax, a.seed)?,
        Kind::PrefAttach => gen::pref_attach(a.n, a.m, a.wmax, a.seed)?,
    };
    let mut out = output(&a.out)?;
    out.write_all(stream.to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}
