//! Max-r-Cut vector relaxation with Gaussian rounding.
//!
//! Minimizing the within-group weight is the same as maximizing the cut
//! weight, whose vector relaxation is
//!
//! ```text
//! maximize   sum_{i<j} w_ij (r-1)/r (1 - <v_i, v_j>)
//! subject to |v_i| = 1,  <v_i, v_j> >= -1/(r-1)
//! ```
//!
//! The relaxation is solved on a rank-`d` factorization (one unit vector per
//! node in `R^d`) by projected gradient steps on the sphere, with the pairwise
//! lower bound enforced by a quadratic penalty whose weight doubles on a
//! fixed schedule. Rounding draws `r` standard Gaussian vectors and sends
//! each node to the one with the largest inner product; the cheapest of
//! several roundings is kept.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AssistantGraph;
use crate::partition::{cost, fill_empty_groups, SimplePartition};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpConfig {
    /// Columns of the factorization; `None` means `min(n, r + 4)`.
    pub rank: Option<usize>,
    pub max_iters: usize,
    pub penalty_start: f64,
    pub penalty_growth: f64,
    pub penalty_every: usize,
    /// Convergence threshold on the projected gradient norm, relative to
    /// `1 + sum w`.
    pub grad_tol: f64,
    /// Largest tolerated violation of `<v_i, v_j> >= -1/(r-1)`.
    pub violation_tol: f64,
    pub rounding_trials: usize,
    pub max_n: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            rank: None,
            max_iters: 5000,
            penalty_start: 1.0,
            penalty_growth: 2.0,
            penalty_every: 100,
            grad_tol: 1e-6,
            violation_tol: 1e-4,
            rounding_trials: 20,
            max_n: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub partition: SimplePartition,
    /// Relaxed cut value `sum_{i<j} w_ij (r-1)/r (1 - <v_i, v_j>)`.
    pub relaxation_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub max_violation: f64,
}

/// Unit row vectors, row-major `n x d`.
struct Embedding {
    n: usize,
    d: usize,
    v: Vec<f64>,
}

impl Embedding {
    fn row(&self, i: usize) -> &[f64] {
        &self.v[i * self.d..(i + 1) * self.d]
    }

    fn gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                g[i * n + j] = dot;
                g[j * n + i] = dot;
            }
        }
        g
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|a| *a /= norm);
    }
}

struct Penalized<'a> {
    ga: &'a AssistantGraph,
    bound: f64,
    penalty: f64,
}

impl Penalized<'_> {
    fn value(&self, gram: &[f64]) -> f64 {
        let n = self.ga.n();
        let mut f = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dot = gram[i * n + j];
                let gap = (self.bound - dot).max(0.0);
                f += self.ga.weight(i, j) * dot + 0.5 * self.penalty * gap * gap;
            }
        }
        f
    }

    /// Tangent-space gradient, row-major like the embedding.
    fn projected_gradient(&self, e: &Embedding, gram: &[f64]) -> Vec<f64> {
        let (n, d) = (e.n, e.d);
        let mut grad = vec![0.0; n * d];
        for i in 0..n {
            let gi = &mut grad[i * d..(i + 1) * d];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let gap = (self.bound - gram[i * n + j]).max(0.0);
                let c = self.ga.weight(i, j) - self.penalty * gap;
                if c != 0.0 {
                    for (g, vj) in gi.iter_mut().zip(e.row(j)) {
                        *g += c * vj;
                    }
                }
            }
            let vi = e.row(i);
            let radial: f64 = gi.iter().zip(vi).map(|(g, v)| g * v).sum();
            for (g, v) in gi.iter_mut().zip(vi) {
                *g -= radial * v;
            }
        }
        grad
    }
}

fn max_violation(gram: &[f64], n: usize, bound: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(bound - gram[i * n + j]);
        }
    }
    worst
}

fn round_once(e: &Embedding, ga: &AssistantGraph, r: usize, rng: &mut impl Rng) -> Result<(f64, SimplePartition)> {
    let gauss: Vec<f64> = (0..r * e.d).map(|_| rng.sample(StandardNormal)).collect();
    let mut assign = vec![0usize; e.n];
    for (i, slot) in assign.iter_mut().enumerate() {
        let vi = e.row(i);
        let mut best = f64::NEG_INFINITY;
        for k in 0..r {
            let dot: f64 = vi.iter().zip(&gauss[k * e.d..(k + 1) * e.d]).map(|(a, b)| a * b).sum();
            if dot > best {
                best = dot;
                *slot = k;
            }
        }
    }
    fill_empty_groups(ga, &mut assign, r);
    let p = SimplePartition::from_assignment(&assign, r)?;
    Ok((cost(ga, &p)?, p))
}

/// Relaxes, rounds `cfg.rounding_trials` times, and keeps the cheapest
/// partition. Running out of iterations is not an error: the outcome carries
/// `converged = false` with the final gradient norm, and rounding proceeds
/// from the last iterate.
pub fn sdp_partition(ga: &AssistantGraph, r: usize, seed: u64, cfg: &SdpConfig) -> Result<SdpOutcome> {
    let n = ga.n();
    if n > cfg.max_n {
        return Err(Error::TooLarge { what: "SDP partitioning", n, max: cfg.max_n });
    }
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!("sample size r = {r} must lie in [1, {n}]")));
    }
    if cfg.rounding_trials == 0 {
        return Err(Error::InvalidParameter("rounding_trials must be at least 1".into()));
    }
    if r == 1 {
        return Ok(SdpOutcome {
            partition: SimplePartition::new(n, vec![(0..n).collect()])?,
            relaxation_value: 0.0,
            iterations: 0,
            converged: true,
            grad_norm: 0.0,
            max_violation: 0.0,
        });
    }

    let d = cfg.rank.unwrap_or(r + 4).clamp(1, n);
    let mut init = rng::stream(seed, 0);
    let mut e = Embedding {
        n,
        d,
        v: (0..n * d).map(|_| init.sample(StandardNormal)).collect(),
    };
    for i in 0..n {
        normalize(&mut e.v[i * d..(i + 1) * d]);
    }

    let bound = -1.0 / (r as f64 - 1.0);
    let scale = 1.0 + ga.total_weight() / 2.0;
    let mut obj = Penalized { ga, bound, penalty: cfg.penalty_start };
    let mut gram = e.gram();
    let mut value = obj.value(&gram);
    let mut step = 1.0 / scale.max(1.0);
    let mut grad_norm = f64::INFINITY;
    let mut violation = max_violation(&gram, n, bound);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if iterations > 0 && iterations % cfg.penalty_every == 0 && violation > cfg.violation_tol {
            obj.penalty *= cfg.penalty_growth;
            value = obj.value(&gram);
        }
        iterations += 1;

        let grad = obj.projected_gradient(&e, &gram);
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        grad_norm = sq.sqrt();
        if grad_norm <= cfg.grad_tol * scale && violation <= cfg.violation_tol {
            converged = true;
            break;
        }

        // Backtracking on the retraction x -> normalize(x - step * grad).
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = Embedding { n, d, v: e.v.clone() };
            for (x, g) in trial.v.iter_mut().zip(&grad) {
                *x -= step * g;
            }
            for i in 0..n {
                normalize(&mut trial.v[i * d..(i + 1) * d]);
            }
            let tgram = trial.gram();
            let tvalue = obj.value(&tgram);
            if tvalue <= value - 1e-4 * step * sq {
                e = trial;
                gram = tgram;
                value = tvalue;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent at machine precision: a stationary point.
            violation = max_violation(&gram, n, bound);
            if violation <= cfg.violation_tol {
                converged = true;
                break;
            }
            obj.penalty *= cfg.penalty_growth;
            value = obj.value(&gram);
            step = 1.0 / scale.max(1.0);
            continue;
        }
        step *= 2.0;
        violation = max_violation(&gram, n, bound);
    }

    let relaxation_value = {
        let mut v = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                v += ga.weight(i, j) * (1.0 - gram[i * n + j]);
            }
        }
        v * (r as f64 - 1.0) / r as f64
    };

    let trials: Vec<(f64, SimplePartition)> = (0..cfg.rounding_trials)
        .into_par_iter()
        .map(|t| round_once(&e, ga, r, &mut rng::stream(seed, t as u64 + 1)))
        .collect::<Result<_>>()?;
    let (_, partition) = trials
        .into_iter()
        .reduce(|best, cand| if cand.0 < best.0 { cand } else { best })
        .expect("at least one rounding trial");

    Ok(SdpOutcome {
        partition,
        relaxation_value,
        iterations,
        converged,
        grad_norm,
        max_violation: violation,
    })
}
