//! Command-line front end. `run` is the whole program minus process exit, so
//! tests can drive it with captured output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::dp::{extract_best, extract_pareto, DpOptions, Engine, Fault, PhaseInfo, RunStats, DEFAULT_STATE_CEILING};
use crate::error::{Error, Result};
use crate::fptas::{run_fptas_with, run_trimmed, Certificate, FptasOptions};
use crate::instance::{load_instance, load_pace_graph, CapacityRule, Costs, Generator, Graph, GraphKind, Instance, InstanceFile};
use crate::layout::{bottom_up_layout, critical_bound, frontier_bound, frontier_profile, Layout};
use crate::oracle::brute_force;
use crate::pareto::covers;
use crate::rational::Ratio;
use crate::treedecomp::{decompose_min_fill, make_nice, read_pace_td, write_pace_td, NiceTreeDecomposition, TreeDecomposition, WidthReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Overrides the per-phase state ceiling.
pub const CEILING_ENV: &str = "MEMSCHED_STATE_CEILING";

#[derive(Debug, Parser)]
#[command(name = "memsched", version, about = "Makespan scheduling with neighborhood memory constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance exactly or with the trimmed approximation.
    Solve(SolveArgs),
    /// Write a generated instance as JSON.
    Gen(GenArgs),
    /// Build (or check) a tree decomposition and report its shape.
    Decompose(DecomposeArgs),
    /// Cross-check both solvers against exhaustive enumeration.
    Verify(VerifyArgs),
    /// Sweep generated instances and report state counts and runtimes.
    Bench(BenchArgs),
    /// Nondominated (makespan, max memory) pairs.
    Pareto(ParetoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    SkipNeighborCharge,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::SkipNeighborCharge => Fault::SkipNeighborCharge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Grid,
    Ktree,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Instance JSON, or a PACE `.gr` graph together with `--sidecar`.
    pub instance: PathBuf,
    /// Costs, weights and capacities for a `.gr` graph.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Use this PACE `.td` decomposition instead of the min-fill heuristic.
    #[arg(long)]
    pub td: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads inside a phase; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write one JSON line per phase to stderr.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    #[arg(long, conflicts_with = "fptas")]
    pub exact: bool,
    #[arg(long)]
    pub fptas: bool,
    /// Accuracy for `--fptas`, as `a/b` or a decimal in (0, 2].
    #[arg(long, visible_alias = "eps", default_value = "1/2")]
    pub epsilon: Ratio,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: KindArg,
    /// `ROWS COLS` for a grid, `N H` for a partial h-tree.
    #[arg(num_args = 2, required = true)]
    pub dims: Vec<usize>,
    /// Edge survival probability for partial h-trees.
    #[arg(long, default_value_t = 0.8)]
    pub keep: f64,
    #[arg(long, default_value_t = 2)]
    pub machines: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inclusive cost range `LO..HI`.
    #[arg(long, default_value = "1..9")]
    pub costs: String,
    #[arg(long, default_value = "1..9")]
    pub weights: String,
    /// `share:A/B` of the total weight per machine, `uniform:C`, or `C1,C2,..`.
    #[arg(long, default_value = "share:3/2")]
    pub capacity: String,
    /// Draw a separate cost per (job, machine).
    #[arg(long)]
    pub unrelated: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Where to write the decomposition in PACE `.td` format.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance to check; generated from the flags below when absent.
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub tw: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Ktree)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 2)]
    pub machines: usize,
    #[arg(long, visible_alias = "eps", default_value = "1")]
    pub epsilon: Ratio,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Job counts (grids use two rows).
    #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
    pub n: Vec<usize>,
    /// `h` for partial h-trees; ignored by grids.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub tw: Vec<usize>,
    #[arg(long, visible_alias = "eps", value_delimiter = ',', default_value = "1/2,1")]
    pub epsilon: Vec<Ratio>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per (n, tw) cell.
    #[arg(long, default_value_t = 2)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Ktree)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 2)]
    pub machines: usize,
    /// Run the oracle only when `k^n` stays below this.
    #[arg(long, default_value_t = 1_000_000)]
    pub oracle_limit: u128,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    #[arg(long, conflicts_with = "fptas")]
    pub exact: bool,
    #[arg(long)]
    pub fptas: bool,
    #[arg(long, visible_alias = "eps", default_value = "1/2")]
    pub epsilon: Ratio,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Stage durations in milliseconds, serialized as an ordered map.
#[derive(Debug, Default)]
struct Timings(Vec<(&'static str, f64)>);

impl Timings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((stage, start.elapsed().as_secs_f64() * 1e3));
        out
    }

    fn total(&self) -> f64 {
        self.0.iter().map(|e| e.1).sum()
    }
}

impl Serialize for Timings {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Everything outside the deterministic part of a report.
#[derive(Debug, Serialize)]
struct Runtime {
    threads: usize,
    timings_ms: Timings,
}

#[derive(Debug, Clone, Serialize)]
struct InstanceSummary {
    n: usize,
    m: usize,
    k: usize,
    width: usize,
    nice_nodes: usize,
    jl_max: usize,
    critical_max: usize,
}

struct Prepared {
    ntd: NiceTreeDecomposition,
    layout: Layout,
    summary: InstanceSummary,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::input("path", format!("{}: {e}", path.display())))
}

fn load(input: &InstanceArgs) -> Result<Instance> {
    match &input.sidecar {
        Some(side) => load_pace_graph(open(&input.instance)?, open(side)?),
        None => load_instance(open(&input.instance)?),
    }
}

fn decompose(instance: &Instance, td: Option<&Path>) -> Result<TreeDecomposition> {
    match td {
        Some(path) => {
            let (td, n) = read_pace_td(open(path)?)?;
            if n != instance.n() {
                return Err(Error::input("td", format!("decomposition is for {n} jobs, instance has {}", instance.n())));
            }
            td.validate(instance.graph()).map_err(|v| Error::input("td", v.to_string()))?;
            Ok(td)
        }
        None => Ok(decompose_min_fill(instance.graph())),
    }
}

fn prepare(instance: &Instance, td: Option<&Path>, timings: &mut Timings) -> Result<Prepared> {
    let td = timings.time("decompose", || decompose(instance, td))?;
    let ntd = timings.time("nice", || make_nice(&td, instance.graph()))?;
    let layout = timings.time("layout", || bottom_up_layout(&ntd));
    let profile = frontier_profile(&ntd, &layout)?;
    let summary = InstanceSummary {
        n: instance.n(),
        m: instance.graph().edge_count(),
        k: instance.k(),
        width: ntd.width(),
        nice_nodes: ntd.len(),
        jl_max: profile.max_size,
        critical_max: profile.max_critical(),
    };
    Ok(Prepared { ntd, layout, summary })
}

fn state_ceiling() -> Result<usize> {
    match std::env::var(CEILING_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::input(CEILING_ENV, format!("{v:?} is not a state count"))),
        Err(_) => Ok(DEFAULT_STATE_CEILING),
    }
}

fn dp_options(run: &RunArgs) -> Result<DpOptions> {
    Ok(DpOptions {
        threads: run.threads,
        ceiling: state_ceiling()?,
        fault: run.inject_fault.map(Fault::from),
    })
}

fn tracer<'a>(enabled: bool, err: &'a mut dyn Write) -> impl FnMut(&PhaseInfo, &crate::dp::StateSpace) + 'a {
    move |info, _| {
        if enabled {
            let _ = writeln!(err, "{}", serde_json::to_string(info).expect("phase info serializes"));
        }
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_csv<R: Serialize>(out: &mut dyn Write, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Internal(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn join(values: &[u64]) -> String {
    values.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Serialize)]
struct SolveEcho {
    instance: String,
    mode: &'static str,
    epsilon: Option<Ratio>,
    td: Option<String>,
}

#[derive(Debug, Serialize)]
struct Outcome {
    status: &'static str,
    makespan: Option<u64>,
    loads: Option<Vec<u64>>,
    mems: Option<Vec<u64>>,
    feasible: Option<bool>,
    assignment: Option<Vec<usize>>,
    certificate: Option<Certificate>,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    command: &'static str,
    args: SolveEcho,
    instance: InstanceSummary,
    outcome: Outcome,
    states: RunStats,
    runtime: Runtime,
}

#[derive(Debug, Serialize)]
struct SolveRow {
    mode: &'static str,
    epsilon: String,
    n: usize,
    m: usize,
    k: usize,
    width: usize,
    jl_max: usize,
    status: &'static str,
    makespan: Option<u64>,
    loads: String,
    mems: String,
    feasible: Option<bool>,
    peak_states: usize,
    total_ms: f64,
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut timings = Timings::default();
    let instance = timings.time("load", || load(&args.input))?;
    let prep = prepare(&instance, args.input.td.as_deref(), &mut timings)?;
    let dp = dp_options(&args.run)?;
    let mode = if args.fptas { "fptas" } else { "exact" };
    let observer = tracer(args.run.trace, err);
    let (outcome, states) = if args.fptas {
        let opts = FptasOptions { dp, trim: true };
        let mut stats = RunStats::default();
        let mut observer = observer;
        let result = timings.time("dp", || {
            run_fptas_with(&instance, &prep.ntd, &prep.layout, args.epsilon, &opts, |info, s| {
                stats.phases = info.phase;
                stats.peak_states = stats.peak_states.max(info.states);
                stats.total_states += info.states;
                stats.max_live = stats.max_live.max(info.live);
                observer(info, s)
            })
        })?;
        let outcome = match result {
            Some(r) => Outcome {
                status: "solution",
                makespan: Some(r.solution.eval.makespan),
                loads: Some(r.solution.eval.load.clone()),
                mems: Some(r.solution.eval.memory.clone()),
                feasible: Some(r.solution.eval.feasible),
                assignment: Some(r.solution.assignment.machine_of.clone()),
                certificate: Some(r.certificate),
            },
            None => infeasible(),
        };
        (outcome, stats)
    } else {
        let engine = Engine::new(&instance, dp)?;
        let run = timings.time("dp", || engine.run(&prep.ntd, &prep.layout, None, observer))?;
        let best = timings.time("extract", || extract_best(&run, instance.capacities()));
        let outcome = match best {
            Some(s) => Outcome {
                status: "solution",
                makespan: Some(s.eval.makespan),
                loads: Some(s.eval.load),
                mems: Some(s.eval.memory),
                feasible: Some(s.eval.feasible),
                assignment: Some(s.assignment.machine_of),
                certificate: None,
            },
            None => infeasible(),
        };
        (outcome, run.stats)
    };
    let code = if outcome.status == "solution" { EXIT_OK } else { EXIT_INFEASIBLE };
    match args.run.format {
        Format::Json => write_json(
            out,
            &SolveReport {
                command: "solve",
                args: SolveEcho {
                    instance: args.input.instance.display().to_string(),
                    mode,
                    epsilon: args.fptas.then_some(args.epsilon),
                    td: args.input.td.as_ref().map(|p| p.display().to_string()),
                },
                instance: prep.summary,
                outcome,
                states,
                runtime: Runtime {
                    threads: args.run.threads,
                    timings_ms: timings,
                },
            },
        )?,
        Format::Csv => write_csv(
            out,
            &[SolveRow {
                mode,
                epsilon: if args.fptas { args.epsilon.to_string() } else { String::new() },
                n: prep.summary.n,
                m: prep.summary.m,
                k: prep.summary.k,
                width: prep.summary.width,
                jl_max: prep.summary.jl_max,
                status: outcome.status,
                makespan: outcome.makespan,
                loads: outcome.loads.as_deref().map(join).unwrap_or_default(),
                mems: outcome.mems.as_deref().map(join).unwrap_or_default(),
                feasible: outcome.feasible,
                peak_states: states.peak_states,
                total_ms: timings.total(),
            }],
        )?,
    }
    Ok(code)
}

fn infeasible() -> Outcome {
    Outcome {
        status: "infeasible",
        makespan: None,
        loads: None,
        mems: None,
        feasible: None,
        assignment: None,
        certificate: None,
    }
}

/// Parses `LO..HI` (inclusive).
fn parse_range(field: &str, s: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let bad = || Error::input(field, format!("expected LO..HI, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn parse_capacity(s: &str) -> Result<CapacityRule> {
    let bad = || Error::input("capacity", format!("expected share:A/B, uniform:C or C1,C2,.. but got {s:?}"));
    if let Some(share) = s.strip_prefix("share:") {
        let r: Ratio = share.parse().map_err(|_| bad())?;
        return Ok(CapacityRule::ShareOfTotal { num: r.num(), den: r.den() });
    }
    if let Some(c) = s.strip_prefix("uniform:") {
        return Ok(CapacityRule::Uniform(c.trim().parse().map_err(|_| bad())?));
    }
    s.split(',')
        .map(|c| c.trim().parse().map_err(|_| bad()))
        .collect::<Result<Vec<u64>>>()
        .map(CapacityRule::PerMachine)
}

fn graph_kind(kind: KindArg, a: usize, b: usize, keep: f64) -> GraphKind {
    match kind {
        KindArg::Grid => GraphKind::GridMesh { rows: a, cols: b },
        KindArg::Ktree => GraphKind::PartialKTree { n: a, h: b, keep },
    }
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut gen = Generator::new(graph_kind(args.kind, args.dims[0], args.dims[1], args.keep), args.machines);
    gen.costs = parse_range("costs", &args.costs)?;
    gen.weights = parse_range("weights", &args.weights)?;
    gen.capacity = parse_capacity(&args.capacity)?;
    gen.unrelated = args.unrelated;
    let instance = gen.generate(args.seed)?;
    let width = decompose_min_fill(instance.graph()).width_report().width;
    let json = serde_json::to_string_pretty(&InstanceFile::from(&instance))?;
    match &args.output {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => writeln!(out, "{json}")?,
    }
    writeln!(
        err,
        "n={} m={} k={} width={width}",
        instance.n(),
        instance.graph().edge_count(),
        instance.k()
    )?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct NiceSummary {
    nodes: usize,
    width: usize,
    jl_max: usize,
    critical_max: usize,
    frontier_bound: usize,
    critical_bound: usize,
}

#[derive(Debug, Serialize)]
struct DecomposeReport {
    command: &'static str,
    n: usize,
    m: usize,
    decomposition: WidthReport,
    nice: NiceSummary,
}

#[derive(Debug, Serialize)]
struct DecomposeRow {
    n: usize,
    m: usize,
    width: usize,
    td_nodes: usize,
    nice_nodes: usize,
    jl_max: usize,
    critical_max: usize,
}

fn cmd_decompose(args: &DecomposeArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = load(&args.input)?;
    let td = decompose(&instance, args.input.td.as_deref())?;
    let report = td.validate(instance.graph()).map_err(|v| Error::Internal(v.to_string()))?;
    if let Some(path) = &args.output {
        write_pace_td(&td, instance.n(), File::create(path)?)?;
    }
    let ntd = make_nice(&td, instance.graph())?;
    let layout = bottom_up_layout(&ntd);
    let profile = frontier_profile(&ntd, &layout)?;
    let nice = NiceSummary {
        nodes: ntd.len(),
        width: ntd.width(),
        jl_max: profile.max_size,
        critical_max: profile.max_critical(),
        frontier_bound: frontier_bound(instance.n(), ntd.max_bag_size()),
        critical_bound: critical_bound(instance.n()),
    };
    match args.format {
        Format::Json => write_json(
            out,
            &DecomposeReport {
                command: "decompose",
                n: instance.n(),
                m: instance.graph().edge_count(),
                decomposition: report,
                nice,
            },
        )?,
        Format::Csv => write_csv(
            out,
            &[DecomposeRow {
                n: instance.n(),
                m: instance.graph().edge_count(),
                width: report.width,
                td_nodes: report.node_count,
                nice_nodes: nice.nodes,
                jl_max: nice.jl_max,
                critical_max: nice.critical_max,
            }],
        )?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn show(makespan: Option<u64>) -> String {
    makespan.map_or_else(|| "infeasible".to_string(), |m| m.to_string())
}

/// Runs every cross-check on one instance.
fn verify_instance(instance: &Instance, epsilon: Ratio, dp: &DpOptions) -> Result<Vec<Check>> {
    let oracle = brute_force(instance)?;
    let ntd = make_nice(&decompose_min_fill(instance.graph()), instance.graph())?;
    let layout = bottom_up_layout(&ntd);
    let run = Engine::new(instance, dp.clone())?.run(&ntd, &layout, None, |_, _| {})?;
    let mut checks = Vec::new();

    let vectors: std::collections::BTreeSet<(Vec<u64>, Vec<u64>)> =
        run.space.iter().map(|s| (s.loads().to_vec(), s.mems().to_vec())).collect();
    checks.push(Check {
        name: "full_space",
        passed: vectors == oracle.all_vectors,
        detail: format!("dp {} vectors, oracle {}", vectors.len(), oracle.all_vectors.len()),
    });

    let best = extract_best(&run, instance.capacities());
    let opt = oracle.optimum.as_ref().map(|o| o.1.makespan);
    let rebuilt = match &best {
        Some(s) => instance.evaluate(&s.assignment)? == s.eval,
        None => true,
    };
    checks.push(Check {
        name: "optimum",
        passed: best.as_ref().map(|s| s.eval.makespan) == opt && rebuilt,
        detail: format!(
            "dp {}, oracle {}, schedule re-evaluates: {rebuilt}",
            show(best.as_ref().map(|s| s.eval.makespan)),
            show(opt)
        ),
    });

    let opts = FptasOptions { dp: dp.clone(), trim: true };
    let approx = run_fptas_with(instance, &ntd, &layout, epsilon, &opts, |_, _| {})?;
    let one_plus = epsilon.one_plus();
    let (passed, detail) = match (&approx, opt) {
        (Some(a), Some(opt)) => {
            let eval = instance.evaluate(&a.solution.assignment)?;
            let ms_ok = one_plus.scales_above(eval.makespan, opt);
            let mem_ok = eval.memory.iter().zip(instance.capacities()).all(|(&m, &c)| one_plus.scales_above(m, c));
            (ms_ok && mem_ok && eval == a.solution.eval, format!("makespan {} vs optimum {opt}, memory {:?}", eval.makespan, eval.memory))
        }
        (None, Some(opt)) => (false, format!("no schedule although the optimum is {opt}")),
        (_, None) => (true, "no feasible schedule exists".to_string()),
    };
    checks.push(Check { name: "guarantee", passed, detail });

    let (trimmed, _) = run_trimmed(instance, &ntd, &layout, epsilon, &opts, |_, _| {})?;
    let front = extract_pareto(&trimmed);
    checks.push(Check {
        name: "pareto_cover",
        passed: covers(&front, &oracle.pareto, epsilon.num(), epsilon.den()),
        detail: format!("{} approximate points for {} exact", front.len(), oracle.pareto.len()),
    });
    Ok(checks)
}

/// The instance with job `j` removed and the rest renumbered.
fn without_job(instance: &Instance, j: usize) -> Result<Instance> {
    let n = instance.n();
    let relabel = |v: usize| if v > j { v - 1 } else { v };
    let edges = instance
        .graph()
        .edges()
        .iter()
        .filter(|&&(u, v)| u != j && v != j)
        .map(|&(u, v)| (relabel(u), relabel(v)));
    let graph = Graph::new(n - 1, edges)?;
    let keep = |v: &[u64]| v.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect::<Vec<_>>();
    let costs = match instance.costs() {
        Costs::Identical(c) => Costs::Identical(keep(c)),
        Costs::Unrelated(c) => Costs::Unrelated(c.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, r)| r.clone()).collect()),
    };
    Instance::new(graph, costs, keep(instance.weights()), instance.capacities().to_vec())
}

/// Drops jobs one at a time while some check still fails.
fn shrink(mut instance: Instance, epsilon: Ratio, dp: &DpOptions) -> Result<Instance> {
    let failing = |inst: &Instance| -> Result<bool> { Ok(verify_instance(inst, epsilon, dp)?.iter().any(|c| !c.passed)) };
    'outer: loop {
        if instance.n() <= 1 {
            return Ok(instance);
        }
        for j in 0..instance.n() {
            let smaller = without_job(&instance, j)?;
            if failing(&smaller)? {
                instance = smaller;
                continue 'outer;
            }
        }
        return Ok(instance);
    }
}

#[derive(Debug, Serialize)]
struct Counterexample {
    seed: u64,
    instance: InstanceFile,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    command: &'static str,
    seed: u64,
    epsilon: Ratio,
    n: usize,
    k: usize,
    verdict: &'static str,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<Counterexample>,
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = match &args.instance {
        Some(path) => load_instance(open(path)?)?,
        None => {
            let (a, b) = match args.kind {
                KindArg::Grid => (2, args.n.div_ceil(2)),
                KindArg::Ktree => (args.n, args.tw),
            };
            Generator::new(graph_kind(args.kind, a, b, 0.8), args.machines).generate(args.seed)?
        }
    };
    let dp = dp_options(&args.run)?;
    let checks = verify_instance(&instance, args.epsilon, &dp)?;
    let failed = checks.iter().any(|c| !c.passed);
    let counterexample = if failed {
        Some(Counterexample {
            seed: args.seed,
            instance: InstanceFile::from(&shrink(instance.clone(), args.epsilon, &dp)?),
        })
    } else {
        None
    };
    let report = VerifyReport {
        command: "verify",
        seed: args.seed,
        epsilon: args.epsilon,
        n: instance.n(),
        k: instance.k(),
        verdict: if failed { "fail" } else { "pass" },
        checks,
        counterexample,
    };
    match args.run.format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                check: &'a str,
                passed: bool,
                detail: &'a str,
            }
            let rows: Vec<Row> = report
                .checks
                .iter()
                .map(|c| Row {
                    check: c.name,
                    passed: c.passed,
                    detail: &c.detail,
                })
                .collect();
            write_csv(out, &rows)?;
        }
    }
    Ok(if failed { EXIT_VERIFY_FAILED } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct BenchRow {
    kind: &'static str,
    seed: u64,
    n: usize,
    k: usize,
    tw: usize,
    m: usize,
    width: usize,
    jl_max: usize,
    epsilon: String,
    exact_peak: Option<usize>,
    trimmed_peak: Option<usize>,
    exact_makespan: Option<u64>,
    fptas_makespan: Option<u64>,
    oracle_makespan: Option<u64>,
    ratio: Option<f64>,
    exact_ms: Option<f64>,
    fptas_ms: Option<f64>,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let dp = DpOptions {
        threads: args.threads,
        ceiling: state_ceiling()?,
        fault: None,
    };
    let mut rows = Vec::new();
    for &n in &args.n {
        let tws: &[usize] = if args.kind == KindArg::Grid { &[2] } else { &args.tw };
        for &tw in tws {
            for seed in args.seed..args.seed + args.seeds {
                let (a, b) = match args.kind {
                    KindArg::Grid => (2, n.div_ceil(2)),
                    KindArg::Ktree => (n, tw),
                };
                let instance = Generator::new(graph_kind(args.kind, a, b, 0.8), args.machines).generate(seed)?;
                let mut timings = Timings::default();
                let prep = prepare(&instance, None, &mut timings)?;
                let start = Instant::now();
                let exact = match Engine::new(&instance, dp.clone())?.run(&prep.ntd, &prep.layout, None, |_, _| {}) {
                    Ok(run) => Some((run.stats.peak_states, extract_best(&run, instance.capacities()).map(|s| s.eval.makespan))),
                    Err(Error::Resource { .. }) => None,
                    Err(e) => return Err(e),
                };
                let exact_ms = exact.as_ref().map(|_| millis(start));
                let small = (instance.k() as u128).checked_pow(instance.n() as u32).is_some_and(|t| t <= args.oracle_limit);
                let oracle = if small { brute_force(&instance)?.optimum.map(|o| o.1.makespan) } else { None };
                for &eps in &args.epsilon {
                    let start = Instant::now();
                    let mut peak = 0;
                    let opts = FptasOptions { dp: dp.clone(), trim: true };
                    let approx = match run_fptas_with(&instance, &prep.ntd, &prep.layout, eps, &opts, |i, _| peak = peak.max(i.states)) {
                        Ok(a) => Some(a.map(|a| a.solution.eval.makespan)),
                        Err(Error::Resource { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    let fptas_ms = approx.as_ref().map(|_| millis(start));
                    let fptas_makespan = approx.flatten();
                    let ratio = match (fptas_makespan, oracle) {
                        (Some(a), Some(o)) if o > 0 => Some(a as f64 / o as f64),
                        _ => None,
                    };
                    rows.push(BenchRow {
                        kind: match args.kind {
                            KindArg::Grid => "grid",
                            KindArg::Ktree => "ktree",
                        },
                        seed,
                        n: instance.n(),
                        k: instance.k(),
                        tw,
                        m: prep.summary.m,
                        width: prep.summary.width,
                        jl_max: prep.summary.jl_max,
                        epsilon: eps.to_string(),
                        exact_peak: exact.as_ref().map(|e| e.0),
                        trimmed_peak: approx.is_some().then_some(peak),
                        exact_makespan: exact.and_then(|e| e.1),
                        fptas_makespan,
                        oracle_makespan: oracle,
                        ratio,
                        exact_ms,
                        fptas_ms,
                    });
                }
            }
        }
    }
    match args.format {
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(out, &rows)?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ParetoReport {
    command: &'static str,
    mode: &'static str,
    epsilon: Option<Ratio>,
    points: Vec<(u64, u64)>,
}

fn cmd_pareto(args: &ParetoArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let instance = load(&args.input)?;
    let mut timings = Timings::default();
    let prep = prepare(&instance, args.input.td.as_deref(), &mut timings)?;
    let dp = dp_options(&args.run)?;
    let observer = tracer(args.run.trace, err);
    let points = if args.fptas {
        let opts = FptasOptions { dp, trim: true };
        extract_pareto(&run_trimmed(&instance, &prep.ntd, &prep.layout, args.epsilon, &opts, observer)?.0)
    } else {
        extract_pareto(&Engine::new(&instance, dp)?.run(&prep.ntd, &prep.layout, None, observer)?)
    };
    match args.run.format {
        Format::Json => write_json(
            out,
            &ParetoReport {
                command: "pareto",
                mode: if args.fptas { "fptas" } else { "exact" },
                epsilon: args.fptas.then_some(args.epsilon),
                points,
            },
        )?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                makespan: u64,
                max_memory: u64,
            }
            let rows: Vec<Row> = points.into_iter().map(|(makespan, max_memory)| Row { makespan, max_memory }).collect();
            write_csv(out, &rows)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Gen(a) => cmd_gen(a, out, err),
        Command::Decompose(a) => cmd_decompose(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Pareto(a) => cmd_pareto(a, out, err),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
