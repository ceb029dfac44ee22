//! Voter model with innate opinions.
//!
//! Each node holds a fixed innate opinion drawn i.i.d. Bernoulli(`mu0`) and an
//! expressed opinion. At the events of a Poisson clock with rate `lambda_i`,
//! node `i` resets its expressed opinion to the innate one with probability
//! `p_i`, or copies out-neighbor `j` with probability `(1 - p_i) A_ij / d_i`.
//!
//! Two samplers are provided. [`simulate_forward`] runs the event-driven
//! dynamics up to a finite horizon. [`sample_steady_state`] draws an exact
//! sample of the stationary joint law by running the dual process backwards
//! in time: one walker per node, walkers step when their node fires, stop at
//! the node's innate copy with probability `p_i`, and merge when they meet.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{SimilarityMatrix, SocialGraph};
use crate::rng::{self, OpsRng};

/// Scale factor of the default forward horizon, see [`default_horizon`].
pub const DEFAULT_HORIZON_FACTOR: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct VioParams {
    pub graph: SocialGraph,
    pub mu0: f64,
}

impl VioParams {
    pub fn new(graph: SocialGraph, mu0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu0) {
            return Err(Error::InvalidParameter(format!("mu0 = {mu0} outside [0, 1]")));
        }
        Ok(Self { graph, mu0 })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Binary opinion per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionAssignment(Vec<u8>);

impl OpinionAssignment {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("opinions must be 0 or 1".into()));
        }
        Ok(Self(values))
    }

    /// Assignment whose bit `i` is the opinion of node `i`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self((0..n).map(|i| ((bits >> i) & 1) as u8).collect())
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Population mean `f-bar`.
    pub fn mean(&self) -> f64 {
        self.0.iter().map(|&v| v as f64).sum::<f64>() / self.0.len() as f64
    }
}

/// `absorber[i] = k` means node `i`'s steady-state opinion is `v_k`'s
/// innate opinion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsorptionTrace {
    pub absorber: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteadyStateSample {
    pub opinions: OpinionAssignment,
    pub trace: AbsorptionTrace,
}

/// Sampling tables shared by the forward and backward samplers.
struct StepTables {
    neighbors: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    inward: Vec<f64>,
    lambda: Vec<f64>,
    uniform_rates: bool,
}

impl StepTables {
    fn new(g: &SocialGraph) -> Self {
        let neighbors = (0..g.n())
            .map(|i| {
                let edges = g.out_edges(i);
                let ids = edges.iter().map(|&(d, _)| d).collect();
                // Weights are positive and finite by SocialGraph's invariants.
                let dist = WeightedIndex::new(edges.iter().map(|&(_, w)| w)).expect("positive out-degree");
                (ids, dist)
            })
            .collect();
        let lambda = g.lambda().to_vec();
        let uniform_rates = lambda.iter().all(|&l| l == lambda[0]);
        Self {
            neighbors,
            inward: g.inward().to_vec(),
            lambda,
            uniform_rates,
        }
    }

    fn neighbor(&self, i: usize, rng: &mut OpsRng) -> usize {
        let (ids, dist) = &self.neighbors[i];
        ids[dist.sample(rng)]
    }
}

fn draw_innate(n: usize, mu0: f64, rng: &mut OpsRng) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random::<f64>() < mu0)).collect()
}

/// `c * sum_i 1 / (lambda_i p_i)`: a multiple of the summed expected waiting
/// times until each node first resets to its innate opinion.
pub fn default_horizon(g: &SocialGraph, c: f64) -> f64 {
    c * g
        .lambda()
        .iter()
        .zip(g.inward())
        .map(|(l, p)| 1.0 / (l * p))
        .sum::<f64>()
}

/// Runs the event-driven dynamics on `[0, horizon]` starting from expressed
/// opinions equal to the innate ones.
pub fn simulate_forward(params: &VioParams, horizon: f64, seed: u64) -> Result<OpinionAssignment> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
    }
    let n = params.n();
    let tables = StepTables::new(&params.graph);
    let mut rng = rng::seeded(seed);
    let innate = draw_innate(n, params.mu0, &mut rng);
    let mut expressed = innate.clone();

    let total: f64 = tables.lambda.iter().sum();
    let clock = Exp::new(total).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let owner_dist = WeightedIndex::new(&tables.lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > horizon {
            break;
        }
        let i = if tables.uniform_rates {
            rng.random_range(0..n)
        } else {
            owner_dist.sample(&mut rng)
        };
        if rng.random::<f64>() < tables.inward[i] {
            expressed[i] = innate[i];
        } else {
            let j = tables.neighbor(i, &mut rng);
            expressed[i] = expressed[j];
        }
    }
    Ok(OpinionAssignment(expressed))
}

/// Exact steady-state sampler over the backward coalescing walks.
pub struct SteadyStateSampler<'a> {
    params: &'a VioParams,
    tables: StepTables,
}

impl<'a> SteadyStateSampler<'a> {
    pub fn new(params: &'a VioParams) -> Self {
        Self {
            params,
            tables: StepTables::new(&params.graph),
        }
    }

    /// Draws the absorbing node of every walker.
    ///
    /// Clusters of merged walkers are identified by a representative walker.
    /// Among the clusters still walking, the next one to step is picked with
    /// probability proportional to the rate of the node it occupies; a node
    /// holds at most one cluster because meeting clusters merge.
    pub fn trace(&self, rng: &mut OpsRng) -> AbsorptionTrace {
        let n = self.params.n();
        let t = &self.tables;
        let mut parent: Vec<usize> = (0..n).collect();
        let mut pos: Vec<usize> = (0..n).collect();
        let mut occupant: Vec<Option<usize>> = (0..n).map(Some).collect();
        let mut absorbed = vec![usize::MAX; n];
        let mut active: Vec<usize> = (0..n).collect();

        while !active.is_empty() {
            let slot = if t.uniform_rates {
                rng.random_range(0..active.len())
            } else {
                let total: f64 = active.iter().map(|&c| t.lambda[pos[c]]).sum();
                let mut u = rng.random::<f64>() * total;
                let mut slot = active.len() - 1;
                for (s, &c) in active.iter().enumerate() {
                    u -= t.lambda[pos[c]];
                    if u < 0.0 {
                        slot = s;
                        break;
                    }
                }
                slot
            };
            let c = active[slot];
            let v = pos[c];
            if rng.random::<f64>() < t.inward[v] {
                absorbed[c] = v;
                occupant[v] = None;
                active.swap_remove(slot);
                continue;
            }
            let a = t.neighbor(v, rng);
            occupant[v] = None;
            match occupant[a] {
                Some(other) => {
                    parent[c] = other;
                    active.swap_remove(slot);
                }
                None => {
                    pos[c] = a;
                    occupant[a] = Some(c);
                }
            }
        }

        let absorber = (0..n)
            .map(|i| {
                let mut r = i;
                while parent[r] != r {
                    r = parent[r];
                }
                absorbed[r]
            })
            .collect();
        AbsorptionTrace { absorber }
    }

    pub fn sample(&self, rng: &mut OpsRng) -> SteadyStateSample {
        let trace = self.trace(rng);
        let innate = draw_innate(self.params.n(), self.params.mu0, rng);
        let opinions = trace.absorber.iter().map(|&k| innate[k]).collect();
        SteadyStateSample {
            opinions: OpinionAssignment(opinions),
            trace,
        }
    }

    /// Sample number `index` of the run seeded with `seed`.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> SteadyStateSample {
        self.sample(&mut rng::stream(seed, index))
    }
}

pub fn sample_steady_state(params: &VioParams, seed: u64) -> SteadyStateSample {
    SteadyStateSampler::new(params).sample(&mut rng::seeded(seed))
}

/// Pairwise frequencies accumulated over independent steady-state draws.
#[derive(Debug, Clone)]
pub struct PairFrequencies {
    pub n: usize,
    pub samples: u64,
    /// Number of draws with `f_i == f_j` (row-major).
    pub agree: Vec<u64>,
    /// Number of draws in which walkers from `i` and `j` share an absorber.
    pub coalesce: Vec<u64>,
}

impl PairFrequencies {
    pub fn agreement(&self, i: usize, j: usize) -> f64 {
        self.agree[i * self.n + j] as f64 / self.samples as f64
    }

    pub fn coalescence(&self, i: usize, j: usize) -> f64 {
        self.coalesce[i * self.n + j] as f64 / self.samples as f64
    }

    pub fn similarity(&self) -> Result<SimilarityMatrix> {
        SimilarityMatrix::from_upper(self.n, |i, j| self.agreement(i, j))
    }
}

/// Draws `samples` steady-state samples (sample `s` uses stream `s` of
/// `seed`) in parallel and counts pairwise agreements and coalescences.
pub fn pair_frequencies(params: &VioParams, samples: u64, seed: u64) -> Result<PairFrequencies> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let n = params.n();
    let sampler = SteadyStateSampler::new(params);
    const CHUNK: u64 = 1024;
    let chunks = samples.div_ceil(CHUNK);
    let (agree, coalesce) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut agree = vec![0u64; n * n];
            let mut coalesce = vec![0u64; n * n];
            for s in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let draw = sampler.sample_indexed(seed, s);
                let f = draw.opinions.values();
                let a = &draw.trace.absorber;
                for i in 0..n {
                    for j in i..n {
                        if f[i] == f[j] {
                            agree[i * n + j] += 1;
                        }
                        if a[i] == a[j] {
                            coalesce[i * n + j] += 1;
                        }
                    }
                }
            }
            (agree, coalesce)
        })
        .reduce(
            || (vec![0u64; n * n], vec![0u64; n * n]),
            |(mut a1, mut c1), (a2, c2)| {
                a1.iter_mut().zip(&a2).for_each(|(x, y)| *x += y);
                c1.iter_mut().zip(&c2).for_each(|(x, y)| *x += y);
                (a1, c1)
            },
        );
    let mut freq = PairFrequencies { n, samples, agree, coalesce };
    for i in 0..n {
        for j in 0..i {
            freq.agree[i * n + j] = freq.agree[j * n + i];
            freq.coalesce[i * n + j] = freq.coalesce[j * n + i];
        }
    }
    Ok(freq)
}

/// Monte-Carlo estimate of the steady-state similarity matrix.
pub fn empirical_similarity(params: &VioParams, samples: u64, seed: u64) -> Result<SimilarityMatrix> {
    pair_frequencies(params, samples, seed)?.similarity()
}

/// Writes `sample_id,node,opinion,absorber` rows for draws `0..samples`.
pub fn write_samples_csv<W: Write>(params: &VioParams, samples: u64, seed: u64, out: W) -> Result<()> {
    let sampler = SteadyStateSampler::new(params);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "node", "opinion", "absorber"])?;
    for s in 0..samples {
        let draw = sampler.sample_indexed(seed, s);
        for (i, (&f, &a)) in draw.opinions.values().iter().zip(&draw.trace.absorber).enumerate() {
            w.write_record([s.to_string(), i.to_string(), f.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
