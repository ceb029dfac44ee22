//! Naive and partitioned estimators of the population mean opinion, their
//! exact variances, and the similarity perturbation used in robustness runs.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{build_assistant_graph, AssistantGraph, SimilarityMatrix, SocialGraph};
use crate::partition::{cost, Partition, SimplePartition};
use crate::rng;
use crate::vio::OpinionAssignment;

/// Slack allowed when checking that a similarity is attainable by two
/// binary variables with the given means.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: f64,
    /// `(group, node)` for every draw, in draw order.
    pub sampled_nodes: Vec<(usize, usize)>,
}

/// Per-node marginal means `mu_i = E[f_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector {
    mu: Vec<f64>,
}

impl MeanVector {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if let Some((i, m)) = mu.iter().enumerate().find(|(_, m)| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidParameter(format!("mean of node {i} is {m}, outside [0, 1]")));
        }
        Ok(Self { mu })
    }

    /// The stationary means of the voter model: `mu0` at every node.
    pub fn uniform(n: usize, mu0: f64) -> Result<Self> {
        Self::new(vec![mu0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Mean of `r` uniform draws with replacement.
pub fn naive_estimate(f: &OpinionAssignment, r: usize, seed: u64) -> Result<EstimateReport> {
    if r == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let p = Partition::naive(f.len(), r)?;
    partitioned_estimate(f, &p, seed)
}

/// Draws `r_k` nodes with replacement inside each group and combines the
/// group means with weights `n_k / n`.
pub fn partitioned_estimate(f: &OpinionAssignment, p: &Partition, seed: u64) -> Result<EstimateReport> {
    let n = f.len();
    if p.n() != n {
        return Err(Error::InvalidPartition(format!("partition covers {} nodes, opinions {n}", p.n())));
    }
    let mut rng = rng::seeded(seed);
    let values = f.values();
    let mut estimate = 0.0;
    let mut sampled_nodes = Vec::with_capacity(p.total_samples());
    for (k, g) in p.groups().iter().enumerate() {
        let mut ones = 0usize;
        for _ in 0..g.samples {
            let v = g.nodes[rng.random_range(0..g.nodes.len())];
            ones += values[v] as usize;
            sampled_nodes.push((k, v));
        }
        estimate += (g.nodes.len() as f64 / n as f64) * (ones as f64 / g.samples as f64);
    }
    Ok(EstimateReport { estimate: estimate.clamp(0.0, 1.0), sampled_nodes })
}

/// `E_M[Var_S] = g(P) / (2 n^2)` for a simple partition.
pub fn expected_variance_simple(sim: &SimilarityMatrix, p: &SimplePartition) -> Result<f64> {
    expected_variance_on(&build_assistant_graph(sim), p)
}

/// Same as [`expected_variance_simple`] on a prebuilt assistant graph.
pub fn expected_variance_on(ga: &AssistantGraph, p: &SimplePartition) -> Result<f64> {
    let n = ga.n() as f64;
    Ok(cost(ga, p)? / (2.0 * n * n))
}

/// Expected sampling variance of an arbitrary partition:
///
/// `sum_k (n_k/n)^2 (1/r_k) E[v_k]` with
/// `E[v_k] = (1/n_k) sum mu_i - (1/n_k^2) [sum mu_i + sum_{i != j} E[f_i f_j]]`
/// and `E[f_i f_j] = (sigma_ij + mu_i + mu_j - 1) / 2`.
pub fn expected_variance_general(sim: &SimilarityMatrix, mu: &MeanVector, p: &Partition) -> Result<f64> {
    let n = sim.n();
    if mu.len() != n || p.n() != n {
        return Err(Error::InvalidParameter(format!(
            "size mismatch: similarity {n}, means {}, partition {}",
            mu.len(),
            p.n()
        )));
    }
    let m = mu.as_slice();
    let mut total = 0.0;
    for g in p.groups() {
        let nk = g.nodes.len() as f64;
        let sum_mu: f64 = g.nodes.iter().map(|&i| m[i]).sum();
        let mut cross = 0.0;
        for (a, &i) in g.nodes.iter().enumerate() {
            for &j in &g.nodes[a + 1..] {
                let both = (sim.get(i, j) + m[i] + m[j] - 1.0) / 2.0;
                let lo = (m[i] + m[j] - 1.0).max(0.0);
                let hi = m[i].min(m[j]);
                if both < lo - CONSISTENCY_TOL || both > hi + CONSISTENCY_TOL {
                    return Err(Error::Inconsistent(format!(
                        "similarity {} of ({i}, {j}) is unattainable with means {} and {}",
                        sim.get(i, j),
                        m[i],
                        m[j]
                    )));
                }
                cross += 2.0 * both;
            }
        }
        let within = sum_mu / nk - (sum_mu + cross) / (nk * nk);
        total += (nk / n as f64).powi(2) * within / g.samples as f64;
    }
    Ok(total.max(0.0))
}

/// Sampling variance of the partitioned estimator for fixed opinions.
pub fn fixed_f_variance(f: &OpinionAssignment, p: &Partition) -> Result<f64> {
    let n = f.len();
    if p.n() != n {
        return Err(Error::InvalidPartition(format!("partition covers {} nodes, opinions {n}", p.n())));
    }
    let values = f.values();
    Ok(p.groups()
        .iter()
        .map(|g| {
            let nk = g.nodes.len() as f64;
            let mk = g.nodes.iter().map(|&i| values[i] as f64).sum::<f64>() / nk;
            (nk / n as f64).powi(2) * (mk - mk * mk) / g.samples as f64
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbConfig {
    /// Noise half-width is `base + slope * sigma_ij`.
    pub base: f64,
    pub slope: f64,
    /// Replace similarities of node pairs without an edge by 0.5.
    pub mask_disconnected: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self { base: 0.1, slope: 0.3, mask_disconnected: true }
    }
}

impl PerturbConfig {
    pub fn exact() -> Self {
        Self { base: 0.0, slope: 0.0, mask_disconnected: false }
    }
}

/// Noisy copy of `sim`. One uniform draw is consumed per unordered pair in
/// row-major order whether or not the pair is masked, so two configs with
/// the same seed perturb shared pairs identically.
pub fn perturb_similarities(
    sim: &SimilarityMatrix,
    g: &SocialGraph,
    seed: u64,
    cfg: &PerturbConfig,
) -> Result<SimilarityMatrix> {
    let n = sim.n();
    if g.n() != n {
        return Err(Error::InvalidParameter(format!("similarity has {n} nodes, graph {}", g.n())));
    }
    let mut rng = rng::seeded(seed);
    SimilarityMatrix::from_upper(n, |i, j| {
        let u: f64 = rng.random();
        let s = sim.get(i, j);
        if cfg.mask_disconnected && !g.connected(i, j) {
            return 0.5;
        }
        let half = cfg.base + cfg.slope * s;
        (s + half * (2.0 * u - 1.0)).clamp(0.0, 1.0)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub method: String,
    pub r: usize,
    pub expected_variance: f64,
    pub seed: u64,
}

/// Writes a `method,r,expected_variance,seed` report.
pub fn write_variance_report<W: Write>(rows: &[VarianceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "r", "expected_variance", "seed"])?;
    for row in rows {
        w.write_record([
            row.method.clone(),
            row.r.to_string(),
            row.expected_variance.to_string(),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Group;

    fn f(bits: &[u8]) -> OpinionAssignment {
        OpinionAssignment::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn constant_opinions_estimate_exactly() {
        let ones = f(&[1; 7]);
        assert_eq!(naive_estimate(&ones, 3, 5).unwrap().estimate, 1.0);
        assert_eq!(fixed_f_variance(&ones, &Partition::naive(7, 3).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn naive_single_draw_on_two_nodes() {
        let two = f(&[0, 1]);
        let mut seen = [0usize; 2];
        for seed in 0..400 {
            let est = naive_estimate(&two, 1, seed).unwrap();
            assert_eq!(est.sampled_nodes.len(), 1);
            seen[est.estimate as usize] += 1;
        }
        assert!(seen[0] > 150 && seen[1] > 150, "{seen:?}");
        assert!(naive_estimate(&two, 0, 0).is_err());
    }

    #[test]
    fn census_is_exact() {
        let v = f(&[1, 0, 0, 1, 1]);
        let p = Partition::new(5, (0..5).map(|i| Group { nodes: vec![i], samples: 1 }).collect()).unwrap();
        let est = partitioned_estimate(&v, &p, 3).unwrap();
        assert!((est.estimate - 0.6).abs() < 1e-15);
        assert_eq!(fixed_f_variance(&v, &p).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_half_variance() {
        let p = Partition::naive(2, 1).unwrap();
        assert!((fixed_f_variance(&f(&[0, 1]), &p).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_node_expected_variance() {
        let sim = SimilarityMatrix::new(2, vec![1.0, 0.8, 0.8, 1.0]).unwrap();
        let one = SimplePartition::new(2, vec![vec![0, 1]]).unwrap();
        let simple = expected_variance_simple(&sim, &one).unwrap();
        assert!((simple - 0.05).abs() < 1e-15);
        let mu = MeanVector::uniform(2, 0.5).unwrap();
        let general = expected_variance_general(&sim, &mu, &one.to_partition()).unwrap();
        assert!((general - 0.05).abs() < 1e-15);
        let singles = SimplePartition::new(2, vec![vec![0], vec![1]]).unwrap();
        assert_eq!(expected_variance_simple(&sim, &singles).unwrap(), 0.0);
    }

    #[test]
    fn constant_means_give_zero() {
        let sim = SimilarityMatrix::from_upper(4, |_, _| 1.0).unwrap();
        let mu = MeanVector::uniform(4, 1.0).unwrap();
        let v = expected_variance_general(&sim, &mu, &Partition::naive(4, 2).unwrap()).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn unattainable_similarity_is_rejected() {
        // two Bernoulli(0.9) variables agree with probability at least 0.8
        let sim = SimilarityMatrix::from_upper(2, |_, _| 0.5).unwrap();
        let mu = MeanVector::uniform(2, 0.9).unwrap();
        assert!(matches!(
            expected_variance_general(&sim, &mu, &Partition::naive(2, 1).unwrap()),
            Err(Error::Inconsistent(_))
        ));
        assert!(MeanVector::new(vec![1.5]).is_err());
    }

    #[test]
    fn perturbation_masks_and_clamps() {
        let g = SocialGraph::new(3, &[(0, 1, 1.0), (1, 0, 1.0), (2, 1, 1.0)], vec![1.0; 3], vec![0.5; 3]).unwrap();
        let sim = SimilarityMatrix::from_upper(3, |_, _| 1.0).unwrap();
        let out = perturb_similarities(&sim, &g, 9, &PerturbConfig::default()).unwrap();
        assert_eq!(out.get(0, 2), 0.5);
        for (i, j) in [(0, 1), (1, 2)] {
            let s = out.get(i, j);
            assert!((0.6..=1.0).contains(&s), "{s}");
            assert_eq!(s, out.get(j, i));
        }
        assert_eq!(out.get(1, 1), 1.0);
        let same = perturb_similarities(&sim, &g, 9, &PerturbConfig::exact()).unwrap();
        assert_eq!(same, sim);
    }

    #[test]
    fn variance_report_format() {
        let rows = [VarianceRow { method: "greedy".into(), r: 3, expected_variance: 0.125, seed: 7 }];
        let mut buf = Vec::new();
        write_variance_report(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "method,r,expected_variance,seed\ngreedy,3,0.125,7\n");
    }
}
