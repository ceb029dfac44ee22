//! Graph substrates: the weighted directed social graph that drives the
//! opinion dynamics, pairwise similarity matrices, the complete assistant
//! graph derived from them, and the planted-partition generator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Weighted directed graph with per-node update rate and inward probability.
///
/// Out-edges are stored as sorted adjacency lists. Every node has a positive
/// weighted out-degree and a positive inward probability; construction fails
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    out: Vec<Vec<(usize, f64)>>,
    out_degree: Vec<f64>,
    lambda: Vec<f64>,
    inward: Vec<f64>,
}

impl SocialGraph {
    /// Builds a graph from `(src, dst, weight)` triples. Parallel edges are
    /// merged by summing their weights; zero-weight edges are dropped.
    pub fn new(
        n: usize,
        edges: &[(usize, usize, f64)],
        lambda: Vec<f64>,
        inward: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if lambda.len() != n || inward.len() != n {
            return Err(Error::InvalidGraph(format!(
                "expected {n} rates and inward probabilities, got {} and {}",
                lambda.len(),
                inward.len()
            )));
        }
        for (i, &l) in lambda.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGraph(format!("node {i}: update rate {l} must be > 0")));
            }
        }
        for (i, &p) in inward.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidGraph(format!(
                    "node {i}: inward probability {p} must lie in (0, 1]"
                )));
            }
        }

        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(s, d, w) in edges {
            if s >= n || d >= n {
                return Err(Error::InvalidGraph(format!("edge ({s}, {d}) references a node >= {n}")));
            }
            if s == d {
                return Err(Error::InvalidGraph(format!("self-loop on node {s}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({s}, {d}) has weight {w}")));
            }
            if w > 0.0 {
                *rows[s].entry(d).or_insert(0.0) += w;
            }
        }

        let out: Vec<Vec<(usize, f64)>> =
            rows.into_iter().map(|r| r.into_iter().collect()).collect();
        let out_degree: Vec<f64> = out.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        if let Some(i) = out_degree.iter().position(|&d| d <= 0.0) {
            return Err(Error::InvalidGraph(format!("node {i} has no out-neighbors")));
        }

        Ok(Self {
            out,
            out_degree,
            lambda,
            inward,
        })
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out[i]
    }

    /// `d_i`, the sum of node `i`'s out-edge weights.
    pub fn weighted_out_degree(&self, i: usize) -> Result<f64> {
        self.out_degree
            .get(i)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: i, n: self.n() })
    }

    pub(crate) fn degree(&self, i: usize) -> f64 {
        self.out_degree[i]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn inward(&self) -> &[f64] {
        &self.inward
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search_by_key(&j, |&(d, _)| d).is_ok()
    }

    /// True when an edge exists in either direction.
    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, r)| r.iter().map(move |&(d, w)| (s, d, w)))
    }

    /// Same topology with new inward probabilities.
    pub fn with_inward(&self, inward: Vec<f64>) -> Result<Self> {
        let edges: Vec<_> = self.edges().collect();
        Self::new(self.n(), &edges, self.lambda.clone(), inward)
    }

    /// Same topology with new update rates.
    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        let edges: Vec<_> = self.edges().collect();
        Self::new(self.n(), &edges, lambda, self.inward.clone())
    }
}

/// Symmetric matrix of pairwise opinion similarities with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

/// Largest asymmetry tolerated (and averaged away) on construction.
const SYMMETRY_TOL: f64 = 1e-9;

impl SimilarityMatrix {
    /// Validates a dense row-major `n x n` matrix.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidSimilarity(format!(
                "expected {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            let d = values[i * n + i];
            if (d - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidSimilarity(format!("diagonal entry ({i}, {i}) is {d}, not 1")));
            }
            values[i * n + i] = 1.0;
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidSimilarity(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
            }
            for j in i + 1..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidSimilarity(format!(
                        "asymmetric entries ({i}, {j}) = {a} and ({j}, {i}) = {b}"
                    )));
                }
                let m = 0.5 * (a + b);
                values[i * n + j] = m;
                values[j * n + i] = m;
            }
        }
        Ok(Self { n, values })
    }

    /// Builds a matrix from a function of the upper triangle (`i < j`).
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![1.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Upper triangle including the diagonal, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Complete graph with weights `w_ij = 1 - sigma_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssistantGraph {
    n: usize,
    weights: Vec<f64>,
}

impl AssistantGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Restriction to `nodes`; local index `a` stands for `nodes[a]`.
    pub fn induced(&self, nodes: &[usize]) -> AssistantGraph {
        let m = nodes.len();
        let mut weights = vec![0.0; m * m];
        for (a, &u) in nodes.iter().enumerate() {
            for (b, &v) in nodes.iter().enumerate() {
                weights[a * m + b] = self.weight(u, v);
            }
        }
        AssistantGraph { n: m, weights }
    }

    /// Total weight over ordered pairs, `sum_{i != j} w_ij`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn build_assistant_graph(sim: &SimilarityMatrix) -> AssistantGraph {
    let n = sim.n();
    let mut weights: Vec<f64> = sim.as_slice().iter().map(|s| 1.0 - s).collect();
    for i in 0..n {
        weights[i * n + i] = 0.0;
    }
    AssistantGraph { n, weights }
}

impl From<&SimilarityMatrix> for AssistantGraph {
    fn from(sim: &SimilarityMatrix) -> Self {
        build_assistant_graph(sim)
    }
}

/// Per-node value generator for update rates and inward probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeValues {
    Constant(f64),
    /// Uniform on the half-open interval `(lo, hi]`, so a zero lower bound
    /// never yields zero.
    Uniform { lo: f64, hi: f64 },
}

impl NodeValues {
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        match *self {
            NodeValues::Constant(v) => vec![v; n],
            NodeValues::Uniform { lo, hi } => (0..n)
                .map(|_| hi - (hi - lo) * rng.random::<f64>())
                .collect(),
        }
    }
}

impl FromStr for NodeValues {
    type Err = Error;

    /// Accepts `0.5`, `const:0.5`, or `uniform:LO:HI` (`u:LO:HI`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse node value spec '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [v] => Ok(NodeValues::Constant(num(v)?)),
            ["const" | "c", v] => Ok(NodeValues::Constant(num(v)?)),
            ["uniform" | "u", lo, hi] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(bad());
                }
                Ok(NodeValues::Uniform { lo, hi })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for NodeValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeValues::Constant(v) => write!(f, "{v}"),
            NodeValues::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedPartitionConfig {
    pub n: usize,
    pub k: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub seed: u64,
}

impl PlantedPartitionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n = {} must be at least 2", self.n));
        }
        if self.k == 0 || self.k > self.n {
            problems.push(format!("k = {} must lie in [1, n]", self.k));
        }
        for (name, p) in [("p_high", self.p_high), ("p_low", self.p_low)] {
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.p_high < self.p_low {
            problems.push(format!("p_high = {} below p_low = {}", self.p_high, self.p_low));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    /// Latent group of node `i`: contiguous blocks, the first `n mod k`
    /// blocks one node larger than the rest.
    pub fn label(&self, i: usize) -> usize {
        let small = self.n / self.k;
        let extra = self.n % self.k;
        let big_span = extra * (small + 1);
        if i < big_span {
            i / (small + 1)
        } else {
            extra + (i - big_span) / small
        }
    }

    fn block(&self, g: usize) -> std::ops::Range<usize> {
        let small = self.n / self.k;
        let extra = self.n % self.k;
        let start = g * small + g.min(extra);
        let len = small + usize::from(g < extra);
        start..start + len
    }
}

#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: SocialGraph,
    pub labels: Vec<usize>,
}

/// Samples an undirected planted-partition graph, stored with both edge
/// directions at unit weight.
///
/// One uniform variate is drawn per unordered pair in `(i, j)` order
/// regardless of the probabilities, so two configurations that differ only
/// in `p_high`/`p_low` produce nested edge sets under the same seed. A node
/// left without neighbors gets one edge to a uniformly chosen member of its
/// latent group (any other node if its group is a singleton).
pub fn generate_planted_partition(
    cfg: &PlantedPartitionConfig,
    lambda: NodeValues,
    inward: NodeValues,
) -> Result<PlantedGraph> {
    cfg.validate()?;
    let n = cfg.n;
    let labels: Vec<usize> = (0..n).map(|i| cfg.label(i)).collect();

    let mut pair_rng = rng::stream(cfg.seed, 0);
    let mut edges = Vec::new();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { cfg.p_high } else { cfg.p_low };
            let u: f64 = pair_rng.random();
            if u < p {
                edges.push((i, j));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }

    let mut repair_rng = rng::stream(cfg.seed, 1);
    for i in 0..n {
        if degree[i] > 0 {
            continue;
        }
        let block = cfg.block(labels[i]);
        let j = if block.len() > 1 {
            let mut j = block.start + repair_rng.random_range(0..block.len() - 1);
            if j >= i {
                j += 1;
            }
            j
        } else {
            let j = repair_rng.random_range(0..n - 1);
            if j >= i {
                j + 1
            } else {
                j
            }
        };
        edges.push((i.min(j), i.max(j)));
        degree[i] += 1;
        degree[j] += 1;
    }

    let directed: Vec<(usize, usize, f64)> = edges
        .iter()
        .flat_map(|&(a, b)| [(a, b, 1.0), (b, a, 1.0)])
        .collect();
    let lambda = lambda.sample(n, &mut rng::stream(cfg.seed, 2));
    let inward = inward.sample(n, &mut rng::stream(cfg.seed, 3));
    let graph = SocialGraph::new(n, &directed, lambda, inward)?;
    Ok(PlantedGraph { graph, labels })
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => {
                let t = s.trim();
                !t.is_empty() && !t.starts_with('#')
            }
            Err(_) => true,
        })
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn field<T: FromStr>(tok: Option<&str>, what: &str, path: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} '{tok}'")))
}

/// Edge list read from a graph file: header `n m`, then `src dst weight`.
pub fn read_edge_list<R: BufRead>(reader: R, path: &str) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let mut lines = data_lines(reader);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty graph file"))?;
    let header = header?;
    let mut tok = header.split_whitespace();
    let n: usize = field(tok.next(), "node count", path, hline)?;
    let m: usize = field(tok.next(), "edge count", path, hline)?;
    if tok.next().is_some() {
        return Err(parse_err(path, hline, "header must be 'n m'"));
    }
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let text = text?;
        let mut tok = text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let s: usize = field(tok.next(), "source", path, line)?;
        let d: usize = field(tok.next(), "target", path, line)?;
        let w: f64 = field(tok.next(), "weight", path, line)?;
        if tok.next().is_some() {
            return Err(parse_err(path, line, "expected 'src dst weight'"));
        }
        if s >= n || d >= n {
            return Err(parse_err(path, line, format!("node id out of range for n = {n}")));
        }
        edges.push((s, d, w));
    }
    if edges.len() != m {
        return Err(parse_err(
            path,
            hline,
            format!("header announces {m} edges, file has {}", edges.len()),
        ));
    }
    Ok((n, edges))
}

/// Node metadata: one `node lambda p` line per node.
pub fn read_node_metadata<R: BufRead>(reader: R, n: usize, path: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lambda = vec![f64::NAN; n];
    let mut inward = vec![f64::NAN; n];
    for (line, text) in data_lines(reader) {
        let text = text?;
        let mut tok = text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let i: usize = field(tok.next(), "node", path, line)?;
        let l: f64 = field(tok.next(), "lambda", path, line)?;
        let p: f64 = field(tok.next(), "inward probability", path, line)?;
        if tok.next().is_some() {
            return Err(parse_err(path, line, "expected 'node lambda p'"));
        }
        if i >= n {
            return Err(parse_err(path, line, format!("node {i} out of range for n = {n}")));
        }
        if !lambda[i].is_nan() {
            return Err(parse_err(path, line, format!("node {i} listed twice")));
        }
        lambda[i] = l;
        inward[i] = p;
    }
    if let Some(i) = lambda.iter().position(|l| l.is_nan()) {
        return Err(parse_err(path, 0, format!("node {i} missing from metadata")));
    }
    Ok((lambda, inward))
}

pub fn read_social_graph(graph_path: &str, nodes_path: &str) -> Result<SocialGraph> {
    let gfile = std::io::BufReader::new(std::fs::File::open(graph_path)?);
    let (n, edges) = read_edge_list(gfile, graph_path)?;
    let nfile = std::io::BufReader::new(std::fs::File::open(nodes_path)?);
    let (lambda, inward) = read_node_metadata(nfile, n, nodes_path)?;
    SocialGraph::new(n, &edges, lambda, inward)
}

pub fn write_edge_list<W: Write>(g: &SocialGraph, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", g.n(), g.edge_count())?;
    for (s, d, wt) in g.edges() {
        writeln!(w, "{s} {d} {wt}")?;
    }
    Ok(())
}

pub fn write_node_metadata<W: Write>(g: &SocialGraph, mut w: W) -> Result<()> {
    for i in 0..g.n() {
        writeln!(w, "{i} {} {}", g.lambda()[i], g.inward()[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_graph(n: usize, edges: &[(usize, usize)]) -> Result<SocialGraph> {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        SocialGraph::new(n, &e, vec![1.0; n], vec![0.5; n])
    }

    #[test]
    fn out_degree_examples() {
        let g = unit_graph(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.weighted_out_degree(0).unwrap(), 1.0);

        let star = unit_graph(4, &[(0, 1), (0, 2), (0, 3), (1, 0), (2, 0), (3, 0)]).unwrap();
        assert_eq!(star.weighted_out_degree(0).unwrap(), 3.0);

        let g = SocialGraph::new(3, &[(0, 1, 0.5), (0, 2, 0.25), (1, 0, 1.0), (2, 0, 1.0)], vec![1.0; 3], vec![1.0; 3])
            .unwrap();
        assert_eq!(g.weighted_out_degree(0).unwrap(), 0.75);
        assert!(matches!(g.weighted_out_degree(3), Err(Error::IndexOutOfRange { index: 3, n: 3 })));
    }

    #[test]
    fn construction_rejects_bad_graphs() {
        assert!(unit_graph(2, &[(0, 1)]).is_err(), "sink node");
        assert!(unit_graph(2, &[(0, 0), (1, 0)]).is_err(), "self loop");
        assert!(SocialGraph::new(2, &[(0, 1, -1.0), (1, 0, 1.0)], vec![1.0; 2], vec![1.0; 2]).is_err());
        assert!(SocialGraph::new(2, &[(0, 1, 1.0), (1, 0, 1.0)], vec![1.0; 2], vec![0.0, 1.0]).is_err());
        assert!(SocialGraph::new(2, &[(0, 1, 1.0), (1, 0, 1.0)], vec![0.0, 1.0], vec![1.0; 2]).is_err());
    }

    #[test]
    fn assistant_graph_is_complement() {
        let ones = SimilarityMatrix::new(3, vec![1.0; 9]).unwrap();
        let ga = build_assistant_graph(&ones);
        assert!((0..3).all(|i| (0..3).all(|j| ga.weight(i, j) == 0.0)));

        let half = SimilarityMatrix::from_upper(4, |_, _| 0.5).unwrap();
        let ga = build_assistant_graph(&half);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(ga.weight(i, j), if i == j { 0.0 } else { 0.5 });
            }
        }

        let two = SimilarityMatrix::from_upper(2, |_, _| 0.8).unwrap();
        assert!((build_assistant_graph(&two).weight(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn similarity_validation() {
        assert!(SimilarityMatrix::new(2, vec![1.0, 0.3, 0.4, 1.0]).is_err());
        assert!(SimilarityMatrix::new(2, vec![1.0, 1.3, 1.3, 1.0]).is_err());
        assert!(SimilarityMatrix::new(2, vec![0.9, 0.3, 0.3, 1.0]).is_err());
        assert!(SimilarityMatrix::new(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn planted_degenerate_probabilities_give_cliques() {
        let cfg = PlantedPartitionConfig { n: 4, k: 2, p_high: 1.0, p_low: 0.0, seed: 9 };
        let pg = generate_planted_partition(&cfg, NodeValues::Constant(1.0), NodeValues::Constant(0.5)).unwrap();
        let mut e: Vec<_> = pg.graph.edges().map(|(a, b, _)| (a, b)).collect();
        e.sort();
        assert_eq!(e, vec![(0, 1), (1, 0), (2, 3), (3, 2)]);
        assert_eq!(pg.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn planted_blocks_are_contiguous_and_balanced() {
        let cfg = PlantedPartitionConfig { n: 10, k: 3, p_high: 0.5, p_low: 0.1, seed: 1 };
        let labels: Vec<usize> = (0..10).map(|i| cfg.label(i)).collect();
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
        for g in 0..3 {
            assert!(cfg.block(g).all(|i| cfg.label(i) == g));
        }
    }

    #[test]
    fn planted_is_deterministic_and_repairs_isolated_nodes() {
        let cfg = PlantedPartitionConfig { n: 30, k: 3, p_high: 0.05, p_low: 0.0, seed: 42 };
        let a = generate_planted_partition(&cfg, NodeValues::Constant(1.0), NodeValues::Uniform { lo: 0.0, hi: 0.01 })
            .unwrap();
        let b = generate_planted_partition(&cfg, NodeValues::Constant(1.0), NodeValues::Uniform { lo: 0.0, hi: 0.01 })
            .unwrap();
        assert_eq!(a.graph, b.graph);
        for (s, d, _) in a.graph.edges() {
            assert_eq!(a.labels[s], a.labels[d], "repair edges stay inside the latent group");
            assert!(a.graph.has_edge(d, s));
        }
        assert!(a.graph.inward().iter().all(|&p| p > 0.0 && p <= 0.01));
    }

    #[test]
    fn config_validation_lists_every_problem() {
        let cfg = PlantedPartitionConfig { n: 4, k: 5, p_high: 0.1, p_low: 0.2, seed: 0 };
        match cfg.validate() {
            Err(Error::InvalidConfig(p)) => assert_eq!(p.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn node_value_specs_parse() {
        assert_eq!("1".parse::<NodeValues>().unwrap(), NodeValues::Constant(1.0));
        assert_eq!("const:0.2".parse::<NodeValues>().unwrap(), NodeValues::Constant(0.2));
        assert_eq!(
            "uniform:0:0.01".parse::<NodeValues>().unwrap(),
            NodeValues::Uniform { lo: 0.0, hi: 0.01 }
        );
        assert!("uniform:1:0".parse::<NodeValues>().is_err());
        assert!("gauss:1:2".parse::<NodeValues>().is_err());
    }

    #[test]
    fn graph_file_round_trip() {
        let g = SocialGraph::new(3, &[(0, 1, 0.5), (1, 2, 2.0), (2, 0, 1.0)], vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 1.0])
            .unwrap();
        let mut gbuf = Vec::new();
        let mut nbuf = Vec::new();
        write_edge_list(&g, &mut gbuf).unwrap();
        write_node_metadata(&g, &mut nbuf).unwrap();
        let (n, edges) = read_edge_list(&gbuf[..], "g").unwrap();
        let (lambda, inward) = read_node_metadata(&nbuf[..], n, "n").unwrap();
        assert_eq!(SocialGraph::new(n, &edges, lambda, inward).unwrap(), g);
    }

    #[test]
    fn malformed_graph_files_report_lines() {
        let err = read_edge_list("2 2\n0 1 1.0\n1 x 1.0\n".as_bytes(), "g.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(read_edge_list("2 3\n0 1 1\n1 0 1\n".as_bytes(), "g").is_err());
        assert!(read_edge_list("2 1\n0 5 1\n".as_bytes(), "g").is_err());
        assert!(read_node_metadata("0 1 0.5\n".as_bytes(), 2, "n").is_err());
        assert!(read_node_metadata("0 1 0.5\n0 1 0.5\n".as_bytes(), 1, "n").is_err());
    }
}
