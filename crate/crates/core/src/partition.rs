//! Partitions of the population and the solvers that search for low-cost
//! simple partitions of an assistant graph.
//!
//! The cost of a simple partition is the sum of group volumes, where the
//! volume of a group sums `w_ij` over ordered pairs `i != j` inside it (each
//! unordered pair counts twice). With that convention the expected sample
//! variance of a simple partition is exactly `cost / (2 n^2)`.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::AssistantGraph;
use crate::rng;

/// One group of a partition with its subsample size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub nodes: Vec<usize>,
    pub samples: usize,
}

/// Disjoint non-empty groups covering `0..n`, each with `samples >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    groups: Vec<Group>,
}

/// Partition with exactly one sample per group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplePartition {
    n: usize,
    groups: Vec<Vec<usize>>,
}

fn check_cover(n: usize, groups: impl Iterator<Item = impl AsRef<[usize]>>) -> Result<()> {
    let mut seen = vec![false; n];
    for (k, g) in groups.enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(Error::InvalidPartition(format!("group {k} is empty")));
        }
        for &v in g {
            if v >= n {
                return Err(Error::InvalidPartition(format!("node {v} out of range for n = {n}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPartition(format!("node {v} appears twice")));
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("node {v} is not covered")));
    }
    Ok(())
}

impl Partition {
    pub fn new(n: usize, groups: Vec<Group>) -> Result<Self> {
        check_cover(n, groups.iter().map(|g| &g.nodes))?;
        if let Some(k) = groups.iter().position(|g| g.samples == 0) {
            return Err(Error::InvalidPartition(format!("group {k} has no samples")));
        }
        let r: usize = groups.iter().map(|g| g.samples).sum();
        if r > n {
            return Err(Error::InvalidPartition(format!("{r} samples exceed population {n}")));
        }
        Ok(Self { n, groups })
    }

    /// The naive design `{(V, r)}`.
    pub fn naive(n: usize, r: usize) -> Result<Self> {
        Self::new(n, vec![Group { nodes: (0..n).collect(), samples: r }])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn total_samples(&self) -> usize {
        self.groups.iter().map(|g| g.samples).sum()
    }

    pub fn is_simple(&self) -> bool {
        self.groups.iter().all(|g| g.samples == 1)
    }

    pub fn to_simple(&self) -> Result<SimplePartition> {
        if !self.is_simple() {
            return Err(Error::InvalidPartition("partition has a group with more than one sample".into()));
        }
        Ok(SimplePartition {
            n: self.n,
            groups: self.groups.iter().map(|g| g.nodes.clone()).collect(),
        })
    }
}

impl SimplePartition {
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        check_cover(n, groups.iter())?;
        Ok(Self { n, groups })
    }

    /// Groups from a node-to-group map with `r` groups.
    pub fn from_assignment(assignment: &[usize], r: usize) -> Result<Self> {
        let mut groups = vec![Vec::new(); r];
        for (v, &g) in assignment.iter().enumerate() {
            if g >= r {
                return Err(Error::InvalidPartition(format!("node {v} assigned to group {g} >= {r}")));
            }
            groups[g].push(v);
        }
        Self::new(assignment.len(), groups)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of groups, which is also the sample size.
    pub fn r(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![0; self.n];
        for (k, g) in self.groups.iter().enumerate() {
            for &v in g {
                a[v] = k;
            }
        }
        a
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn to_partition(&self) -> Partition {
        Partition {
            n: self.n,
            groups: self
                .groups
                .iter()
                .map(|g| Group { nodes: g.clone(), samples: 1 })
                .collect(),
        }
    }
}

impl From<SimplePartition> for Partition {
    fn from(p: SimplePartition) -> Self {
        p.to_partition()
    }
}

fn volume(ga: &AssistantGraph, group: &[usize]) -> f64 {
    let mut v = 0.0;
    for (a, &i) in group.iter().enumerate() {
        for &j in &group[a + 1..] {
            v += ga.weight(i, j);
        }
    }
    2.0 * v
}

/// `g(P)`: summed ordered-pair weight inside groups.
pub fn cost(ga: &AssistantGraph, p: &SimplePartition) -> Result<f64> {
    if p.n() != ga.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} nodes, graph has {}",
            p.n(),
            ga.n()
        )));
    }
    Ok(p.groups.iter().map(|g| volume(ga, g)).sum())
}

/// Cost increase from adding the unassigned `node` to `groups[l]`.
pub fn delta_g(ga: &AssistantGraph, groups: &[Vec<usize>], node: usize, l: usize) -> Result<f64> {
    if node >= ga.n() {
        return Err(Error::IndexOutOfRange { index: node, n: ga.n() });
    }
    if l >= groups.len() {
        return Err(Error::IndexOutOfRange { index: l, n: groups.len() });
    }
    if groups.iter().any(|g| g.contains(&node)) {
        return Err(Error::InvalidPartition(format!("node {node} is already grouped")));
    }
    Ok(2.0 * groups[l].iter().map(|&j| ga.weight(node, j)).sum::<f64>())
}

fn check_r(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!("sample size r = {r} must lie in [1, {n}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyConfig {
    /// Hard cap on full passes over the node sequence.
    pub max_rounds: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self { max_rounds: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub partition: SimplePartition,
    /// Cost after each completed round.
    pub round_costs: Vec<f64>,
    /// Whether the last round made no reassignment.
    pub converged: bool,
}

const UNASSIGNED: usize = usize::MAX;

/// Moves nodes into empty groups until none is left. Each move takes the
/// node with the largest removal gain out of the largest group.
pub(crate) fn fill_empty_groups(ga: &AssistantGraph, assign: &mut [usize], r: usize) {
    let mut sizes = vec![0usize; r];
    for &g in assign.iter() {
        sizes[g] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let largest = (0..r).fold(0, |best, k| if sizes[k] > sizes[best] { k } else { best });
        let mut pick = UNASSIGNED;
        let mut pick_gain = f64::NEG_INFINITY;
        for v in 0..assign.len() {
            if assign[v] != largest {
                continue;
            }
            let gain: f64 = (0..assign.len())
                .filter(|&j| j != v && assign[j] == largest)
                .map(|j| ga.weight(v, j))
                .sum();
            if gain > pick_gain {
                pick_gain = gain;
                pick = v;
            }
        }
        assign[pick] = empty;
        sizes[largest] -= 1;
        sizes[empty] += 1;
    }
}

/// Group-size limits of the balanced variant.
struct Balance {
    base: usize,
    extra: usize,
}

impl Balance {
    fn eligible(&self, sizes: &[usize]) -> Vec<bool> {
        let full = sizes.iter().filter(|&&s| s > self.base).count();
        sizes
            .iter()
            .map(|&s| s < self.base || (s == self.base && full < self.extra))
            .collect()
    }
}

fn run_greedy(
    ga: &AssistantGraph,
    r: usize,
    seed: u64,
    cfg: &GreedyConfig,
    balance: Option<Balance>,
) -> Result<GreedyOutcome> {
    let n = ga.n();
    check_r(n, r)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));

    let mut assign = vec![UNASSIGNED; n];
    let mut sizes = vec![0usize; r];
    let mut acc = vec![0.0; r];
    let mut round_costs = Vec::new();
    let mut converged = false;

    for round in 0..cfg.max_rounds.max(1) {
        let mut moves = 0usize;
        for &x in &order {
            let prev = assign[x];
            if prev != UNASSIGNED {
                sizes[prev] -= 1;
                assign[x] = UNASSIGNED;
            }
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (j, &g) in assign.iter().enumerate() {
                if g != UNASSIGNED {
                    acc[g] += ga.weight(x, j);
                }
            }
            let eligible = match &balance {
                Some(b) => b.eligible(&sizes),
                None => vec![true; r],
            };
            let mut best = UNASSIGNED;
            for l in 0..r {
                if eligible[l] && (best == UNASSIGNED || acc[l] < acc[best]) {
                    best = l;
                }
            }
            // Ties keep the node where it was.
            if prev != UNASSIGNED && eligible[prev] && acc[prev] <= acc[best] {
                best = prev;
            }
            assign[x] = best;
            sizes[best] += 1;
            if best != prev {
                moves += 1;
            }
        }
        if balance.is_none() {
            fill_empty_groups(ga, &mut assign, r);
            sizes.iter_mut().for_each(|s| *s = 0);
            assign.iter().for_each(|&g| sizes[g] += 1);
        }
        let p = SimplePartition::from_assignment(&assign, r)?;
        round_costs.push(cost(ga, &p)?);
        if round > 0 && moves == 0 {
            converged = true;
            break;
        }
    }

    Ok(GreedyOutcome {
        partition: SimplePartition::from_assignment(&assign, r)?,
        round_costs,
        converged,
    })
}

/// Greedy local search over a random node sequence: every node in turn is
/// (re)assigned to the group where it adds the least cost, for repeated
/// rounds until one changes nothing.
pub fn greedy_partition(ga: &AssistantGraph, r: usize, seed: u64, cfg: &GreedyConfig) -> Result<SimplePartition> {
    Ok(greedy_partition_traced(ga, r, seed, cfg)?.partition)
}

pub fn greedy_partition_traced(ga: &AssistantGraph, r: usize, seed: u64, cfg: &GreedyConfig) -> Result<GreedyOutcome> {
    run_greedy(ga, r, seed, cfg, None)
}

/// Greedy search restricted to group sizes `floor(n/r)` and `ceil(n/r)`.
pub fn balanced_greedy_partition(ga: &AssistantGraph, r: usize, seed: u64) -> Result<SimplePartition> {
    check_r(ga.n(), r)?;
    let balance = Balance { base: ga.n() / r, extra: ga.n() % r };
    Ok(run_greedy(ga, r, seed, &GreedyConfig::default(), Some(balance))?.partition)
}

/// Size cap for exhaustive search.
pub const BRUTE_FORCE_MAX: usize = 12;

/// Exhaustive minimum-cost partition into exactly `r` non-empty groups.
///
/// Partitions are enumerated as restricted growth strings in lexicographic
/// order, so among equal-cost optima the lexicographically smallest string
/// wins.
pub fn brute_force_optimal(ga: &AssistantGraph, r: usize) -> Result<SimplePartition> {
    let n = ga.n();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge { what: "brute-force partitioning", n, max: BRUTE_FORCE_MAX });
    }
    check_r(n, r)?;

    struct Search<'a> {
        ga: &'a AssistantGraph,
        n: usize,
        r: usize,
        current: Vec<usize>,
        best: Vec<usize>,
        best_cost: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, used: usize, partial: f64) {
            if partial >= self.best_cost {
                return;
            }
            if i == self.n {
                if used == self.r {
                    self.best_cost = partial;
                    self.best.copy_from_slice(&self.current);
                }
                return;
            }
            let remaining = self.n - i;
            let top = if used < self.r { used } else { self.r - 1 };
            for b in 0..=top {
                let used_after = used.max(b + 1);
                if remaining - 1 < self.r - used_after {
                    continue;
                }
                let add: f64 = (0..i).filter(|&j| self.current[j] == b).map(|j| self.ga.weight(i, j)).sum();
                self.current[i] = b;
                self.visit(i + 1, used_after, partial + 2.0 * add);
            }
        }
    }

    let mut s = Search {
        ga,
        n,
        r,
        current: vec![0; n],
        best: vec![0; n],
        best_cost: f64::INFINITY,
    };
    s.visit(0, 0, 0.0);
    SimplePartition::from_assignment(&s.best, r)
}

/// Splits every group with `r_k > 1` into `r_k` simple groups by greedy
/// search on the induced assistant graph.
pub fn refine_to_simple(ga: &AssistantGraph, p: &Partition, seed: u64) -> Result<SimplePartition> {
    if p.n() != ga.n() {
        return Err(Error::InvalidPartition("partition and graph sizes differ".into()));
    }
    let mut groups = Vec::with_capacity(p.total_samples());
    for (k, g) in p.groups().iter().enumerate() {
        if g.samples == 1 {
            groups.push(g.nodes.clone());
            continue;
        }
        if g.samples > g.nodes.len() {
            return Err(Error::InvalidPartition(format!(
                "group {k} has {} samples but only {} nodes",
                g.samples,
                g.nodes.len()
            )));
        }
        let sub = ga.induced(&g.nodes);
        let split = greedy_partition(&sub, g.samples, rng::derive_seed(seed, &[k as u64]), &GreedyConfig::default())?;
        groups.extend(
            split
                .groups()
                .iter()
                .map(|local| local.iter().map(|&a| g.nodes[a]).collect::<Vec<_>>()),
        );
    }
    SimplePartition::new(p.n(), groups)
}

/// Uniformly shuffled nodes dealt so that every group is non-empty.
pub fn random_simple_partition(n: usize, r: usize, rng: &mut impl Rng) -> Result<SimplePartition> {
    check_r(n, r)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assign = vec![0; n];
    for (pos, &v) in order.iter().enumerate() {
        assign[v] = if pos < r { pos } else { rng.random_range(0..r) };
    }
    SimplePartition::from_assignment(&assign, r)
}

/// Random simple partition with group sizes `floor(n/r)` or `ceil(n/r)`.
pub fn random_balanced_partition(n: usize, r: usize, rng: &mut impl Rng) -> Result<SimplePartition> {
    check_r(n, r)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assign = vec![0; n];
    for (pos, &v) in order.iter().enumerate() {
        assign[v] = pos % r;
    }
    SimplePartition::from_assignment(&assign, r)
}

impl fmt::Display for Partition {
    /// One line per group: node ids, plus ` #r_k=N` when `N > 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.groups {
            let ids: Vec<String> = g.nodes.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", ids.join(" "))?;
            if g.samples > 1 {
                write!(f, " #r_k={}", g.samples)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn write_partition<W: Write>(p: &Partition, mut w: W) -> Result<()> {
    write!(w, "{p}")?;
    Ok(())
}

/// Parses the partition file format; the population is `0..=max id`.
pub fn read_partition<R: BufRead>(reader: R, path: &str) -> Result<Partition> {
    let mut groups = Vec::new();
    let mut max_id = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let bad = |msg: String| Error::Parse { path: path.into(), line: k + 1, msg };
        let (ids, samples) = match line.split_once('#') {
            Some((ids, suffix)) => {
                let s = suffix
                    .trim()
                    .strip_prefix("r_k=")
                    .ok_or_else(|| bad(format!("unknown suffix '#{suffix}'")))?;
                let s: usize = s.trim().parse().map_err(|_| bad(format!("bad subsample size '{s}'")))?;
                (ids, s)
            }
            None => (line.as_str(), 1),
        };
        if ids.trim().is_empty() {
            continue;
        }
        let nodes = ids
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad(format!("bad node id '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        max_id = nodes.iter().copied().chain(max_id).max();
        groups.push(Group { nodes, samples });
    }
    let n = max_id.map_or(0, |m| m + 1);
    Partition::new(n, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_assistant_graph, SimilarityMatrix};

    fn ga_from(n: usize, w: impl Fn(usize, usize) -> f64) -> AssistantGraph {
        build_assistant_graph(&SimilarityMatrix::from_upper(n, |i, j| 1.0 - w(i, j)).unwrap())
    }

    #[test]
    fn cost_examples() {
        let ga = ga_from(3, |_, _| 1.0);
        let singletons = SimplePartition::new(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(cost(&ga, &singletons).unwrap(), 0.0);
        let whole = SimplePartition::new(3, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(cost(&ga, &whole).unwrap(), 6.0);

        let two = ga_from(2, |_, _| 0.2);
        let one = SimplePartition::new(2, vec![vec![0, 1]]).unwrap();
        assert!((cost(&two, &one).unwrap() - 0.4).abs() < 1e-15);
        assert!(cost(&ga, &one).is_err());
    }

    #[test]
    fn delta_g_examples() {
        let ga = ga_from(3, |_, _| 0.3);
        assert_eq!(delta_g(&ga, &[vec![], vec![1]], 0, 0).unwrap(), 0.0);
        assert!((delta_g(&ga, &[vec![], vec![1]], 0, 1).unwrap() - 0.6).abs() < 1e-15);
        assert!(delta_g(&ga, &[vec![1]], 0, 1).is_err());
        assert!(delta_g(&ga, &[vec![1]], 1, 0).is_err());
        assert!(delta_g(&ga, &[vec![1]], 7, 0).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(SimplePartition::new(3, vec![vec![0, 1], vec![]]).is_err());
        assert!(SimplePartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(SimplePartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![Group { nodes: vec![0, 1, 2], samples: 4 }]).is_err());
        assert!(Partition::new(3, vec![Group { nodes: vec![0, 1, 2], samples: 0 }]).is_err());
        assert!(Partition::naive(3, 2).unwrap().to_simple().is_err());
    }

    #[test]
    fn greedy_with_zero_weights_is_valid_and_free() {
        let ga = ga_from(7, |_, _| 0.0);
        for seed in 0..5 {
            let p = greedy_partition(&ga, 3, seed, &GreedyConfig::default()).unwrap();
            assert_eq!(p.r(), 3);
            assert!(p.sizes().iter().all(|&s| s > 0));
            assert_eq!(cost(&ga, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn greedy_recovers_perfect_clusters() {
        let ga = ga_from(4, |i, j| if i / 2 == j / 2 { 0.0 } else { 1.0 });
        for seed in 0..10 {
            let p = greedy_partition(&ga, 2, seed, &GreedyConfig::default()).unwrap();
            assert_eq!(cost(&ga, &p).unwrap(), 0.0);
            let a = p.assignment();
            assert_eq!(a[0], a[1]);
            assert_eq!(a[2], a[3]);
        }
    }

    #[test]
    fn greedy_is_deterministic_per_seed() {
        let ga = ga_from(9, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0);
        let a = greedy_partition(&ga, 3, 17, &GreedyConfig::default()).unwrap();
        let b = greedy_partition(&ga, 3, 17, &GreedyConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn balanced_sizes() {
        let ga = ga_from(5, |i, j| (i + j) as f64 / 10.0);
        let mut sizes = balanced_greedy_partition(&ga, 2, 1).unwrap().sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);

        let ga = ga_from(4, |_, _| 0.5);
        assert_eq!(balanced_greedy_partition(&ga, 2, 1).unwrap().sizes(), vec![2, 2]);

        let ga = ga_from(6, |_, _| 0.0);
        assert_eq!(balanced_greedy_partition(&ga, 3, 4).unwrap().sizes(), vec![2, 2, 2]);

        let ga = ga_from(7, |i, j| if i < 5 && j < 5 { 0.0 } else { 1.0 });
        for seed in 0..10 {
            let mut sizes = balanced_greedy_partition(&ga, 3, seed).unwrap().sizes();
            sizes.sort();
            assert_eq!(sizes, vec![2, 2, 3]);
        }
    }

    #[test]
    fn brute_force_examples() {
        let w = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (0, 1) => 0.1,
            _ => 0.9,
        };
        let ga = ga_from(3, w);
        let p = brute_force_optimal(&ga, 2).unwrap();
        assert_eq!(p.groups(), &[vec![0, 1], vec![2]]);
        assert!((cost(&ga, &p).unwrap() - 0.2).abs() < 1e-12);

        let ga = ga_from(5, |i, j| (i + 2 * j) as f64 / 20.0);
        let all = brute_force_optimal(&ga, 5).unwrap();
        assert_eq!(cost(&ga, &all).unwrap(), 0.0);
        let one = brute_force_optimal(&ga, 1).unwrap();
        assert!((cost(&ga, &one).unwrap() - ga.total_weight()).abs() < 1e-12);

        let big = ga_from(13, |_, _| 0.5);
        assert!(matches!(brute_force_optimal(&big, 2), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn brute_force_breaks_ties_lexicographically() {
        let ga = ga_from(4, |_, _| 0.0);
        let p = brute_force_optimal(&ga, 2).unwrap();
        assert_eq!(p.assignment(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn refine_keeps_simple_input_and_splits_the_rest() {
        let ga = ga_from(6, |i, j| ((i + j) % 3) as f64 / 3.0);
        let simple = SimplePartition::new(6, vec![vec![0, 1], vec![2, 3, 4], vec![5]]).unwrap();
        assert_eq!(refine_to_simple(&ga, &simple.to_partition(), 3).unwrap(), simple);

        let p = Partition::new(
            6,
            vec![Group { nodes: vec![0, 2, 4, 5], samples: 3 }, Group { nodes: vec![1, 3], samples: 1 }],
        )
        .unwrap();
        let refined = refine_to_simple(&ga, &p, 3).unwrap();
        assert_eq!(refined.r(), 4);
        for g in refined.groups() {
            assert!(p.groups().iter().any(|pg| g.iter().all(|v| pg.nodes.contains(v))));
        }

        let too_many = Partition::new(4, vec![Group { nodes: vec![0], samples: 2 }, Group { nodes: vec![1, 2, 3], samples: 1 }])
            .unwrap();
        assert!(refine_to_simple(&ga_from(4, |_, _| 0.5), &too_many, 0).is_err());
    }

    #[test]
    fn refine_of_single_group_is_greedy() {
        let ga = ga_from(8, |i, j| ((i * 5 + j * 5) % 7) as f64 / 7.0);
        let refined = refine_to_simple(&ga, &Partition::naive(8, 3).unwrap(), 21).unwrap();
        let direct = greedy_partition(&ga, 3, rng::derive_seed(21, &[0]), &GreedyConfig::default()).unwrap();
        assert_eq!(refined, direct);
    }

    #[test]
    fn partition_file_round_trip() {
        let p = Partition::new(
            5,
            vec![Group { nodes: vec![0, 3], samples: 1 }, Group { nodes: vec![1, 2, 4], samples: 2 }],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_partition(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 3\n1 2 4 #r_k=2\n");
        assert_eq!(read_partition(&buf[..], "p").unwrap(), p);
        assert!(read_partition("0 1\n1 2\n".as_bytes(), "p").is_err());
        assert!(read_partition("0 1 #rk=2\n".as_bytes(), "p").is_err());
    }

    #[test]
    fn random_partitions_are_valid() {
        let mut rng = rng::seeded(5);
        for _ in 0..50 {
            let p = random_simple_partition(9, 4, &mut rng).unwrap();
            assert_eq!(p.r(), 4);
            let mut sizes = random_balanced_partition(9, 4, &mut rng).unwrap().sizes();
            sizes.sort();
            assert_eq!(sizes, vec![2, 2, 2, 3]);
        }
    }
}
