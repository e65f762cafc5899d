//! `walktest`: random-walk group testing from the command line.
//!
//! Exit status is 0 on success, 1 on a domain error and 2 on a usage
//! error. Errors are reported as one JSON object on standard error.

mod experiment;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use walktest::designs::{auto_params, build, build_auto, sink_incident_edges, DesignSpec, MeasurementMatrix};
use walktest::experiments::{Family, CALIBRATION};
use walktest::graph::{Graph, Vertex};
use walktest::grouptest::{
    decode_threshold, is_disjunct_with_budget, simulate_tests, DefectiveSet, NoiseModel, OutcomeVector,
    DEFAULT_DISJUNCT_BUDGET,
};
use walktest::mixing::{default_delta, mixing_time};
use walktest::walks::{
    check_early_visit, check_influence, check_visit_count_tail, default_cap, estimate_pi_item,
    estimate_pi_item_avoiding, estimate_pi_sink_avoiding, Item, StartRule, WalkMode,
};
use walktest::Error;

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "walktest", version, about = "Graph-constrained group testing with random-walk pools")]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "WALKTEST_WORKERS")]
    workers: Option<usize>,
    /// Human-readable diagnostics in addition to the JSON ones.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a graph and write it as JSON.
    GenGraph(GenGraphArgs),
    /// Point-wise mixing time of a graph.
    Mix(MixArgs),
    /// Monte Carlo walk probabilities and bound checks.
    WalkStats(WalkStatsArgs),
    /// Build a measurement matrix from random walks.
    Design(DesignArgs),
    /// Simulate OR-test outcomes for planted defectives.
    Simulate(SimulateArgs),
    /// Decode outcomes into a defective set.
    Decode(DecodeArgs),
    /// Exhaustive (d, e)-disjunctness check.
    CheckDisjunct(CheckDisjunctArgs),
    /// Run an experiment from a JSON config into an output directory.
    Experiment(experiment::ExperimentArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenGraph(_) => "gen-graph",
            Command::Mix(_) => "mix",
            Command::WalkStats(_) => "walk-stats",
            Command::Design(_) => "design",
            Command::Simulate(_) => "simulate",
            Command::Decode(_) => "decode",
            Command::CheckDisjunct(_) => "check-disjunct",
            Command::Experiment(_) => "experiment",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyName {
    Complete,
    Gnp,
    GnpLog,
    Regular,
    Cycle,
    Path,
    Star,
}

#[derive(Debug, Args, Serialize)]
struct GenGraphArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    n: usize,
    /// Edge probability for `gnp`.
    #[arg(long, required_if_eq("family", "gnp"))]
    p: Option<f64>,
    /// `α` for `gnp-log`, where p = ⌈α ln n⌉ / n.
    #[arg(long, required_if_eq("family", "gnp-log"))]
    alpha: Option<f64>,
    /// Degree for `regular`.
    #[arg(long, required_if_eq("family", "regular"))]
    degree: Option<usize>,
    /// Redraw until connected (and non-bipartite).
    #[arg(long)]
    connected: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MixArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Distance threshold δ.
    #[arg(long, conflicts_with = "paper_delta")]
    delta: Option<f64>,
    /// δ = (1/(2cn))² with the measured c (the default).
    #[arg(long)]
    paper_delta: bool,
    /// Lazy walk (stay put with probability 1/2).
    #[arg(long)]
    lazy: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum Quantity {
    #[value(name = "pi")]
    Pi,
    #[value(name = "piA")]
    PiA,
    #[value(name = "piSink")]
    PiSink,
    #[value(name = "visits")]
    Visits,
    #[value(name = "early")]
    Early,
    #[value(name = "influence")]
    Influence,
}

#[derive(Debug, Args, Serialize)]
struct WalkStatsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    quantity: Quantity,
    /// JSON object: item, avoid, t, k, i, j, t_mix, v, sink, cap, start, mode.
    #[arg(long, default_value = "{}")]
    params: String,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct WalkParams {
    item: Option<Item>,
    #[serde(default)]
    avoid: Vec<Item>,
    #[serde(default)]
    t: usize,
    #[serde(default)]
    k: usize,
    #[serde(default)]
    i: usize,
    #[serde(default)]
    j: usize,
    /// Default: measured.
    t_mix: Option<usize>,
    v: Option<Vertex>,
    sink: Option<Vertex>,
    cap: Option<usize>,
    #[serde(default)]
    start: StartRule,
    #[serde(default)]
    mode: WalkMode,
}

#[derive(Debug, Args, Serialize)]
struct DesignArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    design: u8,
    /// Number of defectives the matrix is sized for.
    #[arg(long, required_if_eq("auto", "true"))]
    d: Option<usize>,
    /// Noise level η for the row count.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Designated start vertices (comma separated), used round-robin.
    #[arg(long, value_delimiter = ',')]
    designated: Vec<Vertex>,
    /// Start every walk at this vertex.
    #[arg(long, conflicts_with = "designated")]
    start: Option<Vertex>,
    /// Sink for designs 3 and 4.
    #[arg(long)]
    sink: Option<Vertex>,
    /// Step cap for designs 3 and 4 (default n³).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, required_unless_present = "auto", conflicts_with = "auto")]
    m: Option<usize>,
    #[arg(long, conflicts_with = "auto")]
    t: Option<usize>,
    /// Sizes from the parameter table with measured c and T(n).
    #[arg(long)]
    auto: bool,
    /// Design 4: hide the sink's edges from the column view.
    #[arg(long)]
    strip_sink_edges: bool,
    #[arg(long)]
    lazy: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Defective item ids (comma separated); may be empty.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    defectives: Vec<u32>,
    /// `none`, `flip:Q` or `dilute:Q`.
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DecodeArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    outcomes: PathBuf,
    /// Negative tests an item may appear in and still be declared
    /// defective (default: the matrix's own τ, else 0).
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CheckDisjunctArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    e: usize,
    /// Limit on subset evaluations.
    #[arg(long, default_value_t = DEFAULT_DISJUNCT_BUDGET)]
    budget: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let verbose = std::env::args().any(|a| a == "--verbose");
            if verbose {
                let _ = e.print();
            }
            eprintln!("{}", json!({ "error": "usage", "message": e.render().to_string() }));
            return ExitCode::from(2);
        }
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("{}", json!({ "error": "usage", "message": "--workers must be at least 1" }));
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.verbose {
                eprintln!("walktest {}: {e}", cli.command.name());
            }
            eprintln!("{}", json!({ "error": e.kind(), "subcommand": cli.command.name(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> walktest::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let params = serde_json::to_value(&cli.command)?;
    let mut manifest = RunManifest::new(cli.command.name(), argv, params, seed);
    let primary: Option<PathBuf> = match &cli.command {
        Command::GenGraph(a) => {
            gen_graph(a, seed, &mut manifest)?;
            a.out.clone()
        }
        Command::Mix(a) => {
            mix(a, &mut manifest)?;
            a.out.clone()
        }
        Command::WalkStats(a) => {
            walk_stats(a, seed, &mut manifest)?;
            a.out.clone()
        }
        Command::Design(a) => {
            design(a, seed, &mut manifest)?;
            a.out.clone()
        }
        Command::Simulate(a) => {
            simulate(a, seed, &mut manifest)?;
            a.out.clone()
        }
        Command::Decode(a) => {
            decode(a, &mut manifest)?;
            a.out.clone()
        }
        Command::CheckDisjunct(a) => {
            check_disjunct(a, &mut manifest)?;
            a.out.clone()
        }
        Command::Experiment(a) => {
            manifest.seed = experiment::run(a, cli.seed, &mut manifest)?;
            Some(a.out.clone())
        }
    };
    manifest.finish(primary.as_deref())
}

fn read_graph(path: &Path, manifest: &mut RunManifest) -> walktest::Result<Graph> {
    Graph::parse(&manifest.read_input(path)?)
}

fn read_matrix(path: &Path, manifest: &mut RunManifest) -> walktest::Result<MeasurementMatrix> {
    let matrix = MeasurementMatrix::parse(&manifest.read_input(path)?)?;
    matrix.validate()?;
    Ok(matrix)
}

fn to_json<T: Serialize>(value: &T) -> walktest::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn mode(lazy: bool) -> WalkMode {
    if lazy {
        WalkMode::Lazy
    } else {
        WalkMode::Simple
    }
}

fn gen_graph(a: &GenGraphArgs, seed: u64, manifest: &mut RunManifest) -> walktest::Result<()> {
    let family = match a.family {
        FamilyName::Complete => Family::Complete { n: a.n },
        FamilyName::Gnp => Family::Gnp { n: a.n, p: a.p.unwrap_or_default() },
        FamilyName::GnpLog => Family::GnpLog {
            n: a.n,
            alpha: a.alpha.unwrap_or_default(),
        },
        FamilyName::Regular => Family::RandomRegular {
            n: a.n,
            degree: a.degree.unwrap_or_default(),
        },
        FamilyName::Cycle => Family::Cycle { n: a.n },
        FamilyName::Path => Family::Path { n: a.n },
        FamilyName::Star => Family::Star { n: a.n },
    };
    let g = if a.connected {
        family.sample(seed, WalkMode::Simple)?.0
    } else {
        family.generate(seed)?
    };
    let text = g.to_json();
    if Graph::parse(&text)? != g {
        return Err(Error::NumericFailure("graph JSON does not round-trip".into()));
    }
    manifest.write_output(a.out.as_deref(), &text)
}

fn mix(a: &MixArgs, manifest: &mut RunManifest) -> walktest::Result<()> {
    let g = read_graph(&a.graph, manifest)?;
    let delta = match a.delta {
        Some(d) => d,
        None => default_delta(&g)?,
    };
    let report = mixing_time(&g, delta, mode(a.lazy))?;
    manifest.write_output(a.out.as_deref(), &to_json(&report)?)
}

fn walk_stats(a: &WalkStatsArgs, seed: u64, manifest: &mut RunManifest) -> walktest::Result<()> {
    let g = read_graph(&a.graph, manifest)?;
    let p: WalkParams = serde_json::from_str(&a.params)?;
    let item = || p.item.ok_or_else(|| Error::InvalidParameter("params need an item".into()));
    let vertex = |v: Option<Vertex>, what: &str| v.ok_or_else(|| Error::InvalidParameter(format!("params need {what}")));
    let report: Value = match a.quantity {
        Quantity::Pi => serde_json::to_value(estimate_pi_item(&g, item()?, p.t, &p.start, p.mode, a.trials, seed)?)?,
        Quantity::PiA => serde_json::to_value(estimate_pi_item_avoiding(
            &g,
            item()?,
            &p.avoid,
            p.t,
            &p.start,
            p.mode,
            a.trials,
            seed,
        )?)?,
        Quantity::PiSink => serde_json::to_value(estimate_pi_sink_avoiding(
            &g,
            item()?,
            &p.avoid,
            vertex(p.sink, "a sink")?,
            p.cap.unwrap_or_else(|| default_cap(&g)),
            &p.start,
            p.mode,
            a.trials,
            seed,
        )?)?,
        Quantity::Visits => serde_json::to_value(check_visit_count_tail(
            &g,
            item()?,
            p.t,
            p.k,
            &p.start,
            p.mode,
            a.trials,
            seed,
        )?)?,
        Quantity::Early => serde_json::to_value(check_early_visit(
            &g,
            vertex(p.v, "a vertex v")?,
            p.k,
            &p.start,
            p.mode,
            a.trials,
            seed,
        )?)?,
        Quantity::Influence => {
            let t_mix = match p.t_mix {
                Some(t) => t,
                None => mixing_time(&g, default_delta(&g)?, p.mode)?.t_mix,
            };
            serde_json::to_value(check_influence(&g, p.i, p.j, t_mix, &p.start, p.mode, a.trials, seed)?)?
        }
    };
    manifest.write_output(a.out.as_deref(), &to_json(&report)?)
}

fn design(a: &DesignArgs, seed: u64, manifest: &mut RunManifest) -> walktest::Result<()> {
    let g = read_graph(&a.graph, manifest)?;
    let start = match a.start {
        Some(vertex) => StartRule::Fixed { vertex },
        None => StartRule::designated_or_uniform(&a.designated),
    };
    let mut spec = DesignSpec {
        design: a.design,
        m: a.m.unwrap_or(0),
        t: a.t.unwrap_or(0),
        start,
        sink: a.sink,
        cap: a.cap,
        mode: mode(a.lazy),
    };
    if a.design >= 3 && spec.sink.is_none() {
        spec.sink = Some((g.n() as Vertex).saturating_sub(1));
    }
    let mut matrix = if a.auto {
        let d = a.d.unwrap_or_default();
        let params = auto_params(&g, d, a.eta, CALIBRATION.constants, spec.mode)?;
        build_auto(&g, &spec, &params, seed)?
    } else {
        let mut m = build(&g, &spec, seed)?;
        m.design.d = a.d;
        m
    };
    if a.strip_sink_edges {
        if a.design != 4 {
            return Err(Error::InvalidParameter("--strip-sink-edges applies to design 4 only".into()));
        }
        let sink = spec.sink.unwrap_or_default();
        matrix = matrix.with_stripped(sink_incident_edges(&g, sink))?;
    }
    let text = matrix.to_json()?;
    MeasurementMatrix::parse(&text)?.validate()?;
    manifest.write_output(a.out.as_deref(), &text)
}

fn simulate(a: &SimulateArgs, seed: u64, manifest: &mut RunManifest) -> walktest::Result<()> {
    let matrix = read_matrix(&a.matrix, manifest)?;
    let noise: NoiseModel = a.noise.parse()?;
    let planted = DefectiveSet::new(matrix.item_kind, a.defectives.clone());
    let y = simulate_tests(&matrix, &planted, &noise, seed)?;
    let text = y.to_json()?;
    OutcomeVector::parse(&text)?;
    manifest.write_output(a.out.as_deref(), &text)
}

fn decode(a: &DecodeArgs, manifest: &mut RunManifest) -> walktest::Result<()> {
    let matrix = read_matrix(&a.matrix, manifest)?;
    let y = OutcomeVector::parse(&manifest.read_input(&a.outcomes)?)?;
    let tau = a.tau.unwrap_or(matrix.design.tau.unwrap_or(0) as usize);
    let decoded = decode_threshold(&matrix, &y, tau)?;
    manifest.write_output(a.out.as_deref(), &to_json(&decoded)?)
}

fn check_disjunct(a: &CheckDisjunctArgs, manifest: &mut RunManifest) -> walktest::Result<()> {
    let matrix = read_matrix(&a.matrix, manifest)?;
    let cert = is_disjunct_with_budget(&matrix, a.d, a.e, a.budget)?;
    manifest.write_output(a.out.as_deref(), &to_json(&cert)?)
}
