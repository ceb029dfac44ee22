//! Config-driven experiment runner.
//!
//! A run is a grid of cells `(param, replicate, method, r)`. Each
//! `(param, replicate)` unit builds one graph, solves its exact similarities
//! once, and evaluates every `(method, r)` on them. Seeds depend only on the
//! master seed and cell coordinates, never on the sweep value or on thread
//! scheduling: the graph of replicate `t` is drawn from the same seed at
//! every sweep value, so a sweep compares the same random graphs.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{
    build_assistant_graph, generate_planted_partition, read_social_graph, NodeValues, PlantedPartitionConfig,
    SocialGraph,
};
use crate::partition::{
    balanced_greedy_partition, brute_force_optimal, greedy_partition, GreedyConfig, Partition, BRUTE_FORCE_MAX,
};
use crate::rng::{derive_seed, label_coord};
use crate::sampling::{
    expected_variance_general, expected_variance_on, perturb_similarities, MeanVector, PerturbConfig,
};
use crate::sdp::{sdp_partition, SdpConfig};
use crate::similarity::{exact_similarity, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Fixed planted graph, sweep over `r` only.
    Small,
    /// Sweep over the ratio `p_high / p_low`.
    PhPl,
    /// Sweep over a constant inward probability.
    Inward,
    /// Greedy on perturbed similarities against greedy and naive.
    Perturb,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Small => "small",
            Self::PhPl => "phpl",
            Self::Inward => "inward",
            Self::Perturb => "perturb",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Self::PhPl | Self::Inward)
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "small" => Ok(Self::Small),
            "phpl" => Ok(Self::PhPl),
            "inward" => Ok(Self::Inward),
            "perturb" => Ok(Self::Perturb),
            _ => Err(format!("unknown experiment kind '{s}' (small, phpl, inward, perturb)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Naive,
    Greedy,
    Balanced,
    Sdp,
    BruteForce,
    /// Greedy run on perturbed similarities, scored on the true ones.
    GreedyP,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Greedy => "greedy",
            Self::Balanced => "balanced",
            Self::Sdp => "sdp",
            Self::BruteForce => "bruteforce",
            Self::GreedyP => "greedy_p",
        }
    }

    /// Label hashed into the partition seed. Greedy_P shares greedy's seeds
    /// so that the two differ only through the similarities they see.
    fn seed_label(self) -> &'static str {
        match self {
            Self::GreedyP => Self::Greedy.name(),
            m => m.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "naive" => Ok(Self::Naive),
            "greedy" => Ok(Self::Greedy),
            "balanced" => Ok(Self::Balanced),
            "sdp" => Ok(Self::Sdp),
            "bruteforce" => Ok(Self::BruteForce),
            "greedy_p" => Ok(Self::GreedyP),
            _ => Err(format!(
                "unknown method '{s}' (naive, greedy, balanced, sdp, bruteforce, greedy_p)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Planted { n: usize, k: usize, p_high: f64, p_low: f64 },
    File { graph: String, nodes: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: GraphSource,
    pub mu0: f64,
    pub lambda: NodeValues,
    pub inward: NodeValues,
    pub methods: Vec<Method>,
    pub r_values: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Sweep values: `p_high / p_low` ratios or inward probabilities.
    pub params: Vec<f64>,
    pub out: Option<String>,
    pub solver: SolverConfig,
    pub perturb: PerturbConfig,
    pub sdp_trials: usize,
}

pub const DEFAULT_REPLICATES: usize = 20;

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let methods = match kind {
            ExperimentKind::Perturb => vec![Method::Naive, Method::Greedy, Method::GreedyP],
            _ => vec![Method::Naive, Method::Greedy],
        };
        let params = match kind {
            ExperimentKind::PhPl => vec![1e2, 1e3, 1e4, 1e5],
            ExperimentKind::Inward => vec![0.05, 0.1, 0.2, 0.4, 0.8],
            _ => Vec::new(),
        };
        Self {
            kind,
            source: GraphSource::Planted { n: 100, k: 20, p_high: 0.9, p_low: 0.01 },
            mu0: 0.5,
            lambda: NodeValues::Constant(1.0),
            inward: NodeValues::Uniform { lo: 0.0, hi: 0.01 },
            methods,
            r_values: vec![10, 20, 30, 40, 50, 60],
            replicates: DEFAULT_REPLICATES,
            seed: 1,
            params,
            out: None,
            solver: SolverConfig::default(),
            perturb: PerturbConfig::default(),
            sdp_trials: SdpConfig::default().rounding_trials,
        }
    }

    /// Parses `key = value` lines on top of the defaults of the file's
    /// `kind`, then applies `overrides` in order. Every problem is collected
    /// before failing.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut errors = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((key, value)) => pairs.push((key.trim().to_string(), value.trim().to_string())),
                None => errors.push(format!("line {}: expected 'key = value'", k + 1)),
            }
        }
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs, errors)
    }

    fn from_pairs(pairs: &[(String, String)], mut errors: Vec<String>) -> Result<Self> {
        let kind = match pairs.iter().rev().find(|(k, _)| k == "kind") {
            Some((_, v)) => v.parse().unwrap_or_else(|e: String| {
                errors.push(e);
                ExperimentKind::Small
            }),
            None => ExperimentKind::Small,
        };
        let mut cfg = Self::new(kind);
        let (mut n, mut k, mut p_high, mut p_low) = match cfg.source {
            GraphSource::Planted { n, k, p_high, p_low } => (n, k, p_high, p_low),
            GraphSource::File { .. } => unreachable!(),
        };
        let (mut graph, mut nodes) = (None, None);

        for (key, value) in pairs {
            let bad = |what: &str| format!("{key}: cannot parse {what} '{value}'");
            macro_rules! set {
                ($slot:expr, $what:expr) => {
                    match value.parse() {
                        Ok(v) => $slot = v,
                        Err(_) => errors.push(bad($what)),
                    }
                };
            }
            match key.as_str() {
                "kind" => {}
                "n" => set!(n, "integer"),
                "k" => set!(k, "integer"),
                "p_high" => set!(p_high, "number"),
                "p_low" => set!(p_low, "number"),
                "graph" => graph = Some(value.clone()),
                "nodes" => nodes = Some(value.clone()),
                "mu0" => set!(cfg.mu0, "number"),
                "lambda" => set!(cfg.lambda, "node value spec"),
                "inward" => set!(cfg.inward, "node value spec"),
                "replicates" => set!(cfg.replicates, "integer"),
                "seed" => set!(cfg.seed, "integer"),
                "out" => cfg.out = Some(value.clone()),
                "tol" => set!(cfg.solver.tol, "number"),
                "max_sweeps" => set!(cfg.solver.max_sweeps, "integer"),
                "noise_base" => set!(cfg.perturb.base, "number"),
                "noise_slope" => set!(cfg.perturb.slope, "number"),
                "mask_disconnected" => set!(cfg.perturb.mask_disconnected, "boolean"),
                "sdp_trials" => set!(cfg.sdp_trials, "integer"),
                "methods" => match parse_list::<Method>(value) {
                    Ok(v) => cfg.methods = v,
                    Err(e) => errors.push(format!("methods: {e}")),
                },
                "r" => match parse_list::<usize>(value) {
                    Ok(v) => cfg.r_values = v,
                    Err(e) => errors.push(format!("r: {e}")),
                },
                "params" => match parse_list::<f64>(value) {
                    Ok(v) => cfg.params = v,
                    Err(e) => errors.push(format!("params: {e}")),
                },
                _ => errors.push(format!("unknown key '{key}'")),
            }
        }

        cfg.source = match (graph, nodes) {
            (Some(graph), Some(nodes)) => GraphSource::File { graph, nodes },
            (None, None) => GraphSource::Planted { n, k, p_high, p_low },
            _ => {
                errors.push("'graph' and 'nodes' must be given together".into());
                GraphSource::Planted { n, k, p_high, p_low }
            }
        };
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    /// Checks everything that does not need the graph; `n` is the node count
    /// when it is already known (file sources).
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        let mut errors = Vec::new();
        let n = match &self.source {
            GraphSource::Planted { n, k, p_high, p_low } => {
                let planted = PlantedPartitionConfig { n: *n, k: *k, p_high: *p_high, p_low: *p_low, seed: 0 };
                if let Err(Error::InvalidConfig(list)) = planted.validate() {
                    errors.extend(list);
                }
                Some(*n)
            }
            GraphSource::File { .. } => n,
        };
        if self.methods.is_empty() {
            errors.push("methods must not be empty".into());
        }
        if self.r_values.is_empty() {
            errors.push("r must list at least one sample size".into());
        }
        if let Some(n) = n {
            for &r in &self.r_values {
                if r == 0 || r > n {
                    errors.push(format!("r = {r} must lie in [1, {n}]"));
                }
            }
            if self.methods.contains(&Method::BruteForce) && n > BRUTE_FORCE_MAX {
                errors.push(format!("bruteforce needs n <= {BRUTE_FORCE_MAX}, got {n}"));
            }
            let sdp_max = SdpConfig::default().max_n;
            if self.methods.contains(&Method::Sdp) && n > sdp_max {
                errors.push(format!("sdp needs n <= {sdp_max}, got {n}"));
            }
        }
        if self.replicates == 0 {
            errors.push("replicates must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mu0) {
            errors.push(format!("mu0 = {} outside [0, 1]", self.mu0));
        }
        if let Err(e) = self.solver.validate() {
            errors.push(e.to_string());
        }
        if !(self.perturb.base >= 0.0 && self.perturb.slope >= 0.0) {
            errors.push("noise_base and noise_slope must be non-negative".into());
        }
        if self.sdp_trials == 0 {
            errors.push("sdp_trials must be at least 1".into());
        }
        check_spec(&self.lambda, "lambda", |lo, _| lo >= 0.0, &mut errors);
        if self.kind != ExperimentKind::Inward {
            check_spec(&self.inward, "inward", |lo, hi| lo >= 0.0 && hi <= 1.0, &mut errors);
        }
        match self.kind {
            ExperimentKind::PhPl => {
                if !matches!(self.source, GraphSource::Planted { .. }) {
                    errors.push("phpl sweeps need a planted graph".into());
                }
                if let GraphSource::Planted { p_high, .. } = self.source {
                    for &ratio in &self.params {
                        if !(ratio.is_finite() && ratio > 0.0 && p_high / ratio <= 1.0) {
                            errors.push(format!("ratio {ratio} gives p_low outside [0, 1]"));
                        }
                    }
                }
            }
            ExperimentKind::Inward => {
                for &p in &self.params {
                    if !(p > 0.0 && p <= 1.0) {
                        errors.push(format!("inward probability {p} must lie in (0, 1]"));
                    }
                }
            }
            _ => {
                if !self.params.is_empty() {
                    errors.push(format!("kind '{}' takes no params", self.kind.name()));
                }
            }
        }
        if self.kind.is_sweep() && self.params.is_empty() {
            errors.push(format!("kind '{}' needs at least one param", self.kind.name()));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }
}

fn check_spec(spec: &NodeValues, key: &str, ok: impl Fn(f64, f64) -> bool, errors: &mut Vec<String>) {
    let (lo, hi) = match *spec {
        NodeValues::Constant(c) => (c, c),
        NodeValues::Uniform { lo, hi } => (lo, hi),
    };
    if !(lo <= hi && ok(lo, hi)) {
        errors.push(format!("{key} = {spec} is out of range"));
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub method: Method,
    pub r: usize,
    pub replicate: usize,
    pub seed: u64,
    pub param: Option<f64>,
    pub expected_variance: f64,
    pub improvement_vs_naive: f64,
}

/// `1 - var / naive`, or 0 when the naive variance is 0.
pub fn improvement(var: f64, naive: f64) -> f64 {
    if naive > 0.0 {
        1.0 - var / naive
    } else {
        0.0
    }
}

pub fn cell_seed(master: u64, method: Method, r: usize, replicate: usize) -> u64 {
    derive_seed(master, &[label_coord(method.seed_label()), r as u64, replicate as u64])
}

pub fn graph_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, &[label_coord("graph"), replicate as u64])
}

pub fn perturb_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, &[label_coord("perturb"), replicate as u64])
}

fn build_graph(cfg: &ExperimentConfig, param: Option<f64>, replicate: usize, file: Option<&SocialGraph>) -> Result<SocialGraph> {
    let inward = match (cfg.kind, param) {
        (ExperimentKind::Inward, Some(p)) => NodeValues::Constant(p),
        _ => cfg.inward,
    };
    match (&cfg.source, file) {
        (_, Some(g)) => match (cfg.kind, param) {
            (ExperimentKind::Inward, Some(p)) => g.with_inward(vec![p; g.n()]),
            _ => Ok(g.clone()),
        },
        (GraphSource::Planted { n, k, p_high, p_low }, None) => {
            let p_low = match (cfg.kind, param) {
                (ExperimentKind::PhPl, Some(ratio)) => p_high / ratio,
                _ => *p_low,
            };
            let planted = PlantedPartitionConfig {
                n: *n,
                k: *k,
                p_high: *p_high,
                p_low,
                seed: graph_seed(cfg.seed, replicate),
            };
            Ok(generate_planted_partition(&planted, cfg.lambda, inward)?.graph)
        }
        (GraphSource::File { .. }, None) => unreachable!("file graphs are loaded up front"),
    }
}

fn run_unit(
    cfg: &ExperimentConfig,
    param: Option<f64>,
    replicate: usize,
    file: Option<&SocialGraph>,
) -> Result<Vec<ResultRow>> {
    let g = build_graph(cfg, param, replicate, file)?;
    let n = g.n();
    let sigma = exact_similarity(&g, cfg.mu0, &cfg.solver)?.sigma;
    let ga = build_assistant_graph(&sigma);
    let mu = MeanVector::uniform(n, cfg.mu0)?;
    let perturbed = if cfg.methods.contains(&Method::GreedyP) {
        let noisy = perturb_similarities(&sigma, &g, perturb_seed(cfg.seed, replicate), &cfg.perturb)?;
        Some(build_assistant_graph(&noisy))
    } else {
        None
    };
    let sdp_cfg = SdpConfig { rounding_trials: cfg.sdp_trials, ..SdpConfig::default() };
    let greedy_cfg = GreedyConfig::default();

    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.r_values.len());
    for &r in &cfg.r_values {
        let naive = expected_variance_general(&sigma, &mu, &Partition::naive(n, r)?)?;
        for &method in &cfg.methods {
            let seed = cell_seed(cfg.seed, method, r, replicate);
            let var = match method {
                Method::Naive => naive,
                Method::Greedy => expected_variance_on(&ga, &greedy_partition(&ga, r, seed, &greedy_cfg)?)?,
                Method::Balanced => expected_variance_on(&ga, &balanced_greedy_partition(&ga, r, seed)?)?,
                Method::Sdp => expected_variance_on(&ga, &sdp_partition(&ga, r, seed, &sdp_cfg)?.partition)?,
                Method::BruteForce => expected_variance_on(&ga, &brute_force_optimal(&ga, r)?)?,
                Method::GreedyP => {
                    let noisy = perturbed.as_ref().expect("perturbed graph built when greedy_p is requested");
                    expected_variance_on(&ga, &greedy_partition(noisy, r, seed, &greedy_cfg)?)?
                }
            };
            rows.push(ResultRow {
                experiment: cfg.kind,
                method,
                r,
                replicate,
                seed,
                param,
                expected_variance: var,
                improvement_vs_naive: improvement(var, naive),
            });
        }
    }
    Ok(rows)
}

/// Runs every cell of `cfg` in parallel. Rows come back ordered by
/// `(param, replicate, r, method)` in config order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let file = match &cfg.source {
        GraphSource::File { graph, nodes } => Some(read_social_graph(graph, nodes)?),
        GraphSource::Planted { .. } => None,
    };
    cfg.validate(file.as_ref().map(SocialGraph::n))?;

    let params: Vec<Option<f64>> = if cfg.kind.is_sweep() {
        cfg.params.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let units: Vec<(usize, Option<f64>, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(pi, &p)| (0..cfg.replicates).map(move |t| (pi, p, t)))
        .collect();
    let mut tagged: Vec<((usize, usize), Vec<ResultRow>)> = units
        .into_par_iter()
        .map(|(pi, p, t)| run_unit(cfg, p, t, file.as_ref()).map(|rows| ((pi, t), rows)))
        .collect::<Result<_>>()?;
    tagged.sort_by_key(|(key, _)| *key);
    Ok(tagged.into_iter().flat_map(|(_, rows)| rows).collect())
}

pub const RESULT_HEADER: [&str; 8] = [
    "experiment",
    "method",
    "r",
    "replicate",
    "seed",
    "param",
    "expected_variance",
    "improvement_vs_naive",
];

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.write_record([
            row.experiment.name().to_string(),
            row.method.name().to_string(),
            row.r.to_string(),
            row.replicate.to_string(),
            row.seed.to_string(),
            row.param.map(|p| p.to_string()).unwrap_or_default(),
            row.expected_variance.to_string(),
            row.improvement_vs_naive.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean of `improvement_vs_naive` (or of the variance) per key.
pub fn mean_by<K: Ord>(rows: &[ResultRow], key: impl Fn(&ResultRow) -> K, value: impl Fn(&ResultRow) -> f64) -> BTreeMap<K, f64> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for row in rows {
        let e = acc.entry(key(row)).or_insert((0.0, 0));
        e.0 += value(row);
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: &str) -> ExperimentConfig {
        let text = format!(
            "kind = {kind}\nn = 12\nk = 3\np_high = 0.8\np_low = 0.05\ninward = uniform:0.05:0.5\nr = 2,4\nreplicates = 2\n"
        );
        ExperimentConfig::parse(&text, &[]).unwrap()
    }

    #[test]
    fn parse_defaults_and_overrides() {
        let cfg = ExperimentConfig::parse("kind = phpl # sweep\n\nseed = 4\n", &[("seed".into(), "9".into())]).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::PhPl);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.params, vec![1e2, 1e3, 1e4, 1e5]);
        assert_eq!(cfg.replicates, DEFAULT_REPLICATES);
    }

    #[test]
    fn every_problem_is_reported() {
        let err = ExperimentConfig::parse("kind = nope\nn = x\nmethods = greedy,magic\nbogus = 1\nnoline\n", &[])
            .unwrap_err();
        match err {
            Error::InvalidConfig(list) => assert_eq!(list.len(), 5, "{list:?}"),
            e => panic!("{e}"),
        }
        let cfg = ExperimentConfig::parse("n = 20\nk = 2\nmethods = bruteforce\nr = 0,30\nreplicates = 0\n", &[]).unwrap();
        match cfg.validate(None).unwrap_err() {
            Error::InvalidConfig(list) => assert_eq!(list.len(), 4, "{list:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn row_count_and_naive_baseline() {
        let cfg = tiny("perturb");
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 2);
        for row in rows.iter().filter(|r| r.method == Method::Naive) {
            assert_eq!(row.improvement_vs_naive, 0.0);
        }
        assert_eq!(rows, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn zero_noise_greedy_p_matches_greedy() {
        let mut cfg = tiny("perturb");
        cfg.perturb = PerturbConfig::exact();
        let rows = run_experiment(&cfg).unwrap();
        for chunk in rows.chunks(3) {
            assert_eq!(chunk[1].method, Method::Greedy);
            assert_eq!(chunk[2].method, Method::GreedyP);
            assert_eq!(chunk[1].expected_variance, chunk[2].expected_variance);
        }
    }

    #[test]
    fn sweep_params_appear_in_rows() {
        let mut cfg = tiny("inward");
        cfg.params = vec![0.1, 0.5];
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2 * 2);
        assert_eq!(rows[0].param, Some(0.1));
        assert_eq!(rows.last().unwrap().param, Some(0.5));
        // graph seeds do not depend on the sweep value
        let a: Vec<u64> = rows.iter().filter(|r| r.param == Some(0.1)).map(|r| r.seed).collect();
        let b: Vec<u64> = rows.iter().filter(|r| r.param == Some(0.5)).map(|r| r.seed).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn results_csv_header() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,method,r,replicate,seed,param,expected_variance,improvement_vs_naive\n"
        );
    }
}
