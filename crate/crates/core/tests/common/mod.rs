#![allow(dead_code)]

use ops_core::graph::{build_assistant_graph, AssistantGraph, SimilarityMatrix, SocialGraph};
use ops_core::rng::{self, OpsRng};
use rand::Rng;

/// Random directed graph: each ordered pair is an edge with probability 0.4
/// and weight in (0.1, 1]; nodes left without out-edges get one to a random
/// other node. Rates in [0.5, 2], inward probabilities in [0.05, 1].
pub fn random_graph(n: usize, rng: &mut OpsRng) -> SocialGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        let before = edges.len();
        for j in 0..n {
            if i != j && rng.random::<f64>() < 0.4 {
                edges.push((i, j, 1.0 - 0.9 * rng.random::<f64>()));
            }
        }
        if edges.len() == before {
            let j = (i + 1 + rng.random_range(0..n - 1)) % n;
            edges.push((i, j, 1.0));
        }
    }
    let lambda = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
    let inward = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
    SocialGraph::new(n, &edges, lambda, inward).unwrap()
}

pub fn random_graph_seeded(n: usize, seed: u64) -> SocialGraph {
    random_graph(n, &mut rng::seeded(seed))
}

/// Assistant graph with i.i.d. uniform weights.
pub fn random_assistant(n: usize, rng: &mut OpsRng) -> AssistantGraph {
    let sim = SimilarityMatrix::from_upper(n, |_, _| rng.random::<f64>()).unwrap();
    build_assistant_graph(&sim)
}

/// Two-node graph with unit edges both ways.
pub fn pair_graph(p: f64) -> SocialGraph {
    SocialGraph::new(2, &[(0, 1, 1.0), (1, 0, 1.0)], vec![1.0; 2], vec![p; 2]).unwrap()
}

/// Half-width of a 3-sigma binomial interval around `p` at `samples` draws.
pub fn three_sigma(p: f64, samples: u64) -> f64 {
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}
