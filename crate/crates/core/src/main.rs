use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ops_core::experiment::{run_experiment, write_results, ExperimentConfig, ExperimentKind, Method};
use ops_core::graph::{
    build_assistant_graph, generate_planted_partition, read_social_graph, write_edge_list, write_node_metadata,
    NodeValues, PlantedPartitionConfig,
};
use ops_core::partition::{
    balanced_greedy_partition, brute_force_optimal, greedy_partition, read_partition, write_partition, GreedyConfig,
    Partition, SimplePartition,
};
use ops_core::sampling::{expected_variance_general, write_variance_report, MeanVector, VarianceRow};
use ops_core::sdp::{sdp_partition, SdpConfig};
use ops_core::similarity::{exact_similarity, read_similarity_csv, write_upper_csv, SolverConfig, SweepSchedule};
use ops_core::vio::{pair_frequencies, write_samples_csv, VioParams};

#[derive(Parser)]
#[command(name = "ops", version, about = "Partitioned sampling of opinions on social graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a planted-partition social graph.
    GenGraph(GenGraphArgs),
    /// Exact pairwise opinion similarities of a social graph.
    Similarities(SimilaritiesArgs),
    /// Partition a population from its similarity matrix.
    Partition(PartitionArgs),
    /// Expected sampling variance of partitions or partitioning methods.
    Evaluate(EvaluateArgs),
    /// Run a configured experiment and write one CSV row per cell.
    Experiment(ExperimentArgs),
    /// Run the perturbation robustness experiment.
    Perturb(ExperimentArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Stopping tolerance of the iterative solvers.
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_sweeps)]
    max_sweeps: usize,
    /// Parallel Jacobi sweeps instead of Gauss-Seidel.
    #[arg(long)]
    jacobi: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            schedule: if self.jacobi { SweepSchedule::Jacobi } else { SweepSchedule::GaussSeidel },
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    n: usize,
    /// Number of latent groups.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p_high: f64,
    #[arg(long)]
    p_low: f64,
    /// Update rates: a constant or `uniform:lo:hi`.
    #[arg(long, default_value = "1")]
    lambda: NodeValues,
    /// Inward probabilities: a constant or `uniform:lo:hi`.
    #[arg(long, default_value = "0.5")]
    inward: NodeValues,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge list output.
    #[arg(long)]
    out: PathBuf,
    /// Node metadata output (`node lambda p`).
    #[arg(long)]
    nodes: PathBuf,
    /// Optional `node,label` CSV with the latent groups.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct SimilaritiesArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    mu0: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Add an `empirical` column from this many exact steady-state draws.
    #[arg(long)]
    monte_carlo: Option<u64>,
    /// Write the steady-state draws to this CSV (needs --monte-carlo).
    #[arg(long)]
    dump_samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// `i,j,value` similarity CSV.
    #[arg(long)]
    similarities: PathBuf,
    #[arg(long, default_value = "greedy")]
    method: Method,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    similarities: PathBuf,
    /// Partition files to evaluate, reported with method `file:<path>`.
    #[arg(long)]
    partition: Vec<PathBuf>,
    /// Methods to run for every value of --r.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',')]
    r: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    mu0: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Comma-separated method list.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn load(&self, forced: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        let mut overrides = Vec::new();
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects key=value, got '{kv}'");
            };
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("max_sweeps", self.max_sweeps.map(|v| v.to_string())),
            ("methods", self.methods.clone()),
            ("r", self.r.clone()),
            ("replicates", self.replicates.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        overrides.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        if let Some(kind) = forced {
            overrides.push(("kind".into(), kind.name().into()));
        }
        Ok(ExperimentConfig::parse(&text, &overrides)?)
    }
}

/// Writes the whole buffer at once, so failures never leave partial files.
fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().lock().write_all(bytes)?;
            Ok(())
        }
    }
}

fn path_str(p: &PathBuf) -> String {
    p.display().to_string()
}

fn read_sigma(path: &PathBuf) -> Result<ops_core::graph::SimilarityMatrix> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_similarity_csv(BufReader::new(file), &path_str(path))?)
}

fn gen_graph(a: &GenGraphArgs) -> Result<()> {
    let cfg = PlantedPartitionConfig { n: a.n, k: a.k, p_high: a.p_high, p_low: a.p_low, seed: a.seed };
    let planted = generate_planted_partition(&cfg, a.lambda, a.inward)?;
    let mut edges = Vec::new();
    write_edge_list(&planted.graph, &mut edges)?;
    let mut nodes = Vec::new();
    write_node_metadata(&planted.graph, &mut nodes)?;
    let labels = a.labels.as_ref().map(|_| {
        let mut s = String::from("node,label\n");
        for (i, l) in planted.labels.iter().enumerate() {
            s.push_str(&format!("{i},{l}\n"));
        }
        s
    });
    emit(Some(&a.out), &edges)?;
    emit(Some(&a.nodes), &nodes)?;
    if let (Some(path), Some(text)) = (&a.labels, labels) {
        emit(Some(path), text.as_bytes())?;
    }
    Ok(())
}

fn similarities(a: &SimilaritiesArgs) -> Result<()> {
    if a.dump_samples.is_some() && a.monte_carlo.is_none() {
        bail!("--dump-samples needs --monte-carlo");
    }
    let g = read_social_graph(&path_str(&a.graph), &path_str(&a.nodes))?;
    let exact = exact_similarity(&g, a.mu0, &a.solver.config())?;
    let params = VioParams::new(g, a.mu0)?;
    let mut buf = Vec::new();
    match a.monte_carlo {
        Some(samples) => {
            let freq = pair_frequencies(&params, samples, a.seed)?;
            let empirical = |i: usize, j: usize| freq.agreement(i, j);
            write_upper_csv(exact.sigma.n(), |i, j| exact.sigma.get(i, j), Some(("empirical", &empirical)), &mut buf)?;
        }
        None => write_upper_csv(exact.sigma.n(), |i, j| exact.sigma.get(i, j), None, &mut buf)?,
    }
    let dump = match (&a.dump_samples, a.monte_carlo) {
        (Some(path), Some(samples)) => {
            let mut d = Vec::new();
            write_samples_csv(&params, samples, a.seed, &mut d)?;
            Some((path, d))
        }
        _ => None,
    };
    emit(a.out.as_ref(), &buf)?;
    if let Some((path, d)) = dump {
        emit(Some(path), &d)?;
    }
    Ok(())
}

fn run_method(
    ga: &ops_core::graph::AssistantGraph,
    method: Method,
    r: usize,
    seed: u64,
) -> Result<Option<SimplePartition>> {
    Ok(match method {
        Method::Naive => None,
        Method::Greedy => Some(greedy_partition(ga, r, seed, &GreedyConfig::default())?),
        Method::Balanced => Some(balanced_greedy_partition(ga, r, seed)?),
        Method::Sdp => Some(sdp_partition(ga, r, seed, &SdpConfig::default())?.partition),
        Method::BruteForce => Some(brute_force_optimal(ga, r)?),
        Method::GreedyP => bail!("greedy_p needs a social graph; use the perturb command"),
    })
}

fn partition(a: &PartitionArgs) -> Result<()> {
    let sigma = read_sigma(&a.similarities)?;
    let ga = build_assistant_graph(&sigma);
    let p = match run_method(&ga, a.method, a.r, a.seed)? {
        Some(simple) => simple.to_partition(),
        None => Partition::naive(sigma.n(), a.r)?,
    };
    let mut buf = Vec::new();
    write_partition(&p, &mut buf)?;
    emit(a.out.as_ref(), &buf)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.partition.is_empty() && a.methods.is_empty() {
        bail!("nothing to evaluate: give --partition files or --methods with --r");
    }
    if !a.methods.is_empty() && a.r.is_empty() {
        bail!("--methods needs at least one --r value");
    }
    let sigma = read_sigma(&a.similarities)?;
    let ga = build_assistant_graph(&sigma);
    let mu = MeanVector::uniform(sigma.n(), a.mu0)?;
    let mut rows = Vec::new();
    for path in &a.partition {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let p = read_partition(BufReader::new(file), &path_str(path))?;
        rows.push(VarianceRow {
            method: format!("file:{}", path.display()),
            r: p.total_samples(),
            expected_variance: expected_variance_general(&sigma, &mu, &p)?,
            seed: a.seed,
        });
    }
    for &r in &a.r {
        for &method in &a.methods {
            let p = match run_method(&ga, method, r, a.seed)? {
                Some(simple) => simple.to_partition(),
                None => Partition::naive(sigma.n(), r)?,
            };
            rows.push(VarianceRow {
                method: method.name().into(),
                r,
                expected_variance: expected_variance_general(&sigma, &mu, &p)?,
                seed: a.seed,
            });
        }
    }
    let mut buf = Vec::new();
    write_variance_report(&rows, &mut buf)?;
    emit(a.out.as_ref(), &buf)
}

fn experiment(a: &ExperimentArgs, forced: Option<ExperimentKind>) -> Result<()> {
    let cfg = a.load(forced)?;
    let rows = run_experiment(&cfg)?;
    let mut buf = Vec::new();
    write_results(&rows, &mut buf)?;
    emit(cfg.out.as_ref().map(PathBuf::from).as_ref(), &buf)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Similarities(a) => similarities(a),
        Command::Partition(a) => partition(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a, None),
        Command::Perturb(a) => experiment(a, Some(ExperimentKind::Perturb)),
    }
}
