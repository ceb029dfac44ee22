//! Exact steady-state opinion correlations and similarities.
//!
//! For walkers started at `v_i` and `v_j`:
//!
//! * `Q[i][k]` is the probability that the walker from `v_i` stops at `v_k`'s
//!   innate copy. `Q` solves `(I - (I - P) D^-1 A) Q = P`.
//! * `Pr[I_ij^l]` is the probability that the two walkers first meet at `v_l`.
//! * `rho_ij = sum_k Q_ik Q_jk + sum_l Pr[I_ij^l] h_l` with
//!   `h_l = 1 - sum_k Q_lk^2`, the probability both stop at the same copy.
//! * `sigma_ij = 1 - 2 mu0 (1 - mu0) (1 - rho_ij)`.
//!
//! The meeting probabilities obey one linear system per meeting node `l`,
//! which differ only in their boundary values (`1` at `(l, l)`, `0` at the
//! other diagonal pairs). By linearity the aggregate
//! `M_ij = sum_l Pr[I_ij^l] h_l` satisfies the same recurrence with boundary
//! `M_ii = h_i`, so [`compute_meeting_values`] solves a single system over
//! node pairs with sparse sweeps costing `O(n m)` each. The full per-`l`
//! tensor is available from [`compute_meeting_probs_bruteforce`] for small
//! graphs.
//!
//! Both fixed-point iterations converge because every pair equation has
//! nonnegative coefficients summing to at most `1 - min_i p_i < 1`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{SimilarityMatrix, SocialGraph};

/// Largest overshoot of a correlation past `[0, 1]` that is clamped rather
/// than reported as a solver failure.
pub const CLAMP_TOL: f64 = 1e-6;

/// Size cap for the dense direct solve of `Q`.
pub const DENSE_Q_MAX: usize = 500;

/// Size cap for the per-meeting-node brute-force system.
pub const BRUTEFORCE_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSchedule {
    /// In-place updates over pairs `i < j` in order.
    GaussSeidel,
    /// Simultaneous updates from the previous iterate, rows in parallel.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub schedule: SweepSchedule,
    /// Fall back to a dense solve of `Q` (for `n <= DENSE_Q_MAX`) when the
    /// iteration runs out of sweeps.
    pub dense_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 10_000,
            schedule: SweepSchedule::GaussSeidel,
            dense_fallback: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dense `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Dense) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Q[i][k]`: probability the walker from `v_i` stops at `v_k`'s innate copy.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionMatrix(pub Dense);

/// `M[i][j] = sum_l Pr[I_ij^l] h_l`, with `M[i][i] = h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetingValues(pub Dense);

/// Steady-state opinion correlations `rho_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(pub Dense);

impl AbsorptionMatrix {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.0.get(i, k)
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.0.row(i).iter().sum()
    }

    /// `h_i = 1 - sum_k Q_ik^2`: probability that two independent walkers
    /// from `v_i` stop at different copies.
    pub fn split_probabilities(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| 1.0 - self.0.row(i).iter().map(|q| q * q).sum::<f64>())
            .collect()
    }
}

impl MeetingValues {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn n(&self) -> usize {
        self.0.n
    }
}

/// Fixed-point iteration `X <- P + (I - P) D^-1 A X` from `X = P`, updating
/// rows in place.
///
/// Starting from `P <= Q` the iterates increase monotonically towards `Q`,
/// so the row-sum deficit `max_i (1 - sum_k X_ik)` bounds the entrywise
/// error. The iteration stops once that deficit drops below `cfg.tol`.
pub fn compute_q(g: &SocialGraph, cfg: &SolverConfig) -> Result<AbsorptionMatrix> {
    cfg.validate()?;
    let n = g.n();
    let p = g.inward();
    let mut x = Dense::zeros(n);
    for i in 0..n {
        x.data[i * n + i] = p[i];
    }
    let mut row = vec![0.0; n];
    let mut deficit = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        deficit = 0.0f64;
        for i in 0..n {
            row.iter_mut().for_each(|v| *v = 0.0);
            let scale = (1.0 - p[i]) / g.degree(i);
            for &(a, w) in g.out_edges(i) {
                let c = scale * w;
                for (r, xa) in row.iter_mut().zip(x.row(a)) {
                    *r += c * xa;
                }
            }
            row[i] += p[i];
            x.data[i * n..(i + 1) * n].copy_from_slice(&row);
            deficit = deficit.max(1.0 - row.iter().sum::<f64>());
        }
        if deficit < cfg.tol {
            return Ok(AbsorptionMatrix(x));
        }
    }
    Err(Error::NotConverged {
        what: "absorption matrix",
        sweeps: cfg.max_sweeps,
        residual: deficit,
    })
}

/// `(I - (I - P) D^-1 A)^-1 P` by dense LU.
pub fn compute_q_dense(g: &SocialGraph) -> Result<AbsorptionMatrix> {
    let n = g.n();
    if n > DENSE_Q_MAX {
        return Err(Error::TooLarge { what: "dense absorption solve", n, max: DENSE_Q_MAX });
    }
    let p = g.inward();
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        let scale = (1.0 - p[i]) / g.degree(i);
        for &(j, w) in g.out_edges(i) {
            a[(i, j)] -= scale * w;
        }
    }
    let rhs = DMatrix::from_diagonal(&DVector::from_column_slice(p));
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Inconsistent("absorption system is singular".into()))?;
    let mut q = Dense::zeros(n);
    for i in 0..n {
        for k in 0..n {
            q.data[i * n + k] = sol[(i, k)];
        }
    }
    Ok(AbsorptionMatrix(q))
}

/// Iterative solve with the dense fallback allowed by `cfg`.
pub fn solve_q(g: &SocialGraph, cfg: &SolverConfig) -> Result<AbsorptionMatrix> {
    match compute_q(g, cfg) {
        Err(Error::NotConverged { .. }) if cfg.dense_fallback && g.n() <= DENSE_Q_MAX => compute_q_dense(g),
        other => other,
    }
}

/// Per-node coefficients `lambda_i (1 - p_i) / d_i` of the pair recurrence.
fn move_weights(g: &SocialGraph) -> Vec<f64> {
    (0..g.n())
        .map(|i| g.lambda()[i] * (1.0 - g.inward()[i]) / g.degree(i))
        .collect()
}

/// Right-hand side of the pair recurrence at `(i, j)`, `i != j`.
#[inline]
fn pair_update(g: &SocialGraph, mv: &[f64], m: &Dense, i: usize, j: usize) -> f64 {
    let lambda = g.lambda();
    let denom = lambda[i] + lambda[j];
    let mut from_i = 0.0;
    for &(a, w) in g.out_edges(i) {
        from_i += w * m.get(a, j);
    }
    let mut from_j = 0.0;
    for &(b, w) in g.out_edges(j) {
        from_j += w * m.get(i, b);
    }
    (mv[i] * from_i + mv[j] * from_j) / denom
}

/// Solves the aggregated meeting recurrence
///
/// `M_ij = sum_a lambda_i (1-p_i) A_ia / ((lambda_i+lambda_j) d_i) M_aj
///       + sum_b lambda_j (1-p_j) A_jb / ((lambda_i+lambda_j) d_j) M_ib`
///
/// for `i != j` with `M_ii = h_i`, iterating from zero until the largest
/// update of a sweep falls below `cfg.tol`.
pub fn compute_meeting_values(g: &SocialGraph, q: &AbsorptionMatrix, cfg: &SolverConfig) -> Result<MeetingValues> {
    cfg.validate()?;
    let n = g.n();
    if q.n() != n {
        return Err(Error::InvalidParameter(format!("Q has {} rows, graph has {n} nodes", q.n())));
    }
    let h = q.split_probabilities();
    let mv = move_weights(g);
    let mut m = Dense::zeros(n);
    for i in 0..n {
        m.data[i * n + i] = h[i];
    }

    let mut update = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        update = match cfg.schedule {
            SweepSchedule::GaussSeidel => {
                let mut max_delta = 0.0f64;
                for i in 0..n {
                    for j in i + 1..n {
                        let v = pair_update(g, &mv, &m, i, j);
                        max_delta = max_delta.max((v - m.data[i * n + j]).abs());
                        m.data[i * n + j] = v;
                        m.data[j * n + i] = v;
                    }
                }
                max_delta
            }
            SweepSchedule::Jacobi => {
                let prev = &m;
                let rows: Vec<Vec<f64>> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { h[i] } else { pair_update(g, &mv, prev, i, j) })
                            .collect()
                    })
                    .collect();
                let next = Dense { n, data: rows.concat() };
                let delta = next.max_abs_diff(&m);
                m = next;
                delta
            }
        };
        if update < cfg.tol {
            return Ok(MeetingValues(m));
        }
    }
    Err(Error::NotConverged {
        what: "meeting values",
        sweeps: cfg.max_sweeps,
        residual: update,
    })
}

/// `Pr[I_ij^l]` for every `(i, j, l)`.
#[derive(Debug, Clone)]
pub struct MeetingTensor {
    n: usize,
    /// Indexed `[(i * n + j) * n + l]`.
    probs: Vec<f64>,
}

impl MeetingTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.probs[(i * self.n + j) * self.n + l]
    }

    /// `sum_l Pr[I_ij^l] weights[l]` as a dense matrix.
    pub fn contract(&self, weights: &[f64]) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (0..n).map(|l| self.get(i, j, l) * weights[l]).sum();
            }
        }
        out
    }
}

/// Dense direct solve of the meeting-probability system, one right-hand side
/// per meeting node `l`, over the `n (n - 1)` ordered off-diagonal pairs.
pub fn compute_meeting_probs_bruteforce(g: &SocialGraph) -> Result<MeetingTensor> {
    let n = g.n();
    if n > BRUTEFORCE_MAX {
        return Err(Error::TooLarge { what: "brute-force meeting probabilities", n, max: BRUTEFORCE_MAX });
    }
    let mut index = vec![usize::MAX; n * n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                index[i * n + j] = pairs.len();
                pairs.push((i, j));
            }
        }
    }
    let u = pairs.len();
    let lambda = g.lambda();
    let p = g.inward();
    let mut a = DMatrix::<f64>::identity(u, u);
    let mut rhs = DMatrix::<f64>::zeros(u, n);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let denom = lambda[i] + lambda[j];
        let ci = lambda[i] * (1.0 - p[i]) / (denom * g.degree(i));
        let cj = lambda[j] * (1.0 - p[j]) / (denom * g.degree(j));
        // walker i steps to a, pair becomes (a, j)
        for &(a_node, w) in g.out_edges(i) {
            if a_node == j {
                rhs[(row, j)] += ci * w;
            } else {
                a[(row, index[a_node * n + j])] -= ci * w;
            }
        }
        // walker j steps to b, pair becomes (i, b)
        for &(b_node, w) in g.out_edges(j) {
            if b_node == i {
                rhs[(row, i)] += cj * w;
            } else {
                a[(row, index[i * n + b_node])] -= cj * w;
            }
        }
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Inconsistent("meeting system is singular".into()))?;

    let mut probs = vec![0.0; n * n * n];
    for i in 0..n {
        probs[(i * n + i) * n + i] = 1.0;
    }
    for (row, &(i, j)) in pairs.iter().enumerate() {
        for l in 0..n {
            probs[(i * n + j) * n + l] = sol[(row, l)];
        }
    }
    Ok(MeetingTensor { n, probs })
}

fn clamp_unit(v: f64, what: &str, i: usize, j: usize) -> Result<f64> {
    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&v) {
        return Err(Error::Inconsistent(format!("{what} ({i}, {j}) = {v} outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// `rho_ij = sum_k Q_ik Q_jk + M_ij`.
pub fn correlation(q: &AbsorptionMatrix, m: &MeetingValues) -> Result<CorrelationMatrix> {
    let n = q.n();
    if m.0.n != n {
        return Err(Error::InvalidParameter("Q and M sizes differ".into()));
    }
    let mut rho = Dense::zeros(n);
    for i in 0..n {
        for j in i..n {
            let overlap: f64 = q.0.row(i).iter().zip(q.0.row(j)).map(|(a, b)| a * b).sum();
            let v = clamp_unit(overlap + m.get(i, j), "correlation", i, j)?;
            rho.data[i * n + j] = v;
            rho.data[j * n + i] = v;
        }
        let diag = rho.data[i * n + i];
        if (diag - 1.0).abs() > 1e-12 {
            return Err(Error::Inconsistent(format!("correlation ({i}, {i}) = {diag}, expected 1")));
        }
    }
    Ok(CorrelationMatrix(rho))
}

/// `sigma_ij = 1 - 2 mu0 (1 - mu0) (1 - rho_ij)`.
pub fn similarity(rho: &CorrelationMatrix, mu0: f64) -> Result<SimilarityMatrix> {
    if !(0.0..=1.0).contains(&mu0) {
        return Err(Error::InvalidParameter(format!("mu0 = {mu0} outside [0, 1]")));
    }
    let spread = 2.0 * mu0 * (1.0 - mu0);
    SimilarityMatrix::from_upper(rho.n(), |i, j| 1.0 - spread * (1.0 - rho.get(i, j)))
}

/// Every intermediate of the exact similarity pipeline.
#[derive(Debug, Clone)]
pub struct ExactSimilarity {
    pub q: AbsorptionMatrix,
    pub meeting: MeetingValues,
    pub rho: CorrelationMatrix,
    pub sigma: SimilarityMatrix,
}

pub fn exact_similarity(g: &SocialGraph, mu0: f64, cfg: &SolverConfig) -> Result<ExactSimilarity> {
    let q = solve_q(g, cfg)?;
    let meeting = compute_meeting_values(g, &q, cfg)?;
    let rho = correlation(&q, &meeting)?;
    let sigma = similarity(&rho, mu0)?;
    Ok(ExactSimilarity { q, meeting, rho, sigma })
}

/// Writes `i,j,value` rows over the upper triangle including the diagonal,
/// with an optional extra column.
pub fn write_upper_csv<W: Write>(
    n: usize,
    value: impl Fn(usize, usize) -> f64,
    extra: Option<(&str, &dyn Fn(usize, usize) -> f64)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match extra {
        Some((name, _)) => w.write_record(["i", "j", "value", name])?,
        None => w.write_record(["i", "j", "value"])?,
    }
    for i in 0..n {
        for j in i..n {
            let mut rec = vec![i.to_string(), j.to_string(), value(i, j).to_string()];
            if let Some((_, f)) = extra {
                rec.push(f(i, j).to_string());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an `i,j,value` upper-triangle file back into a similarity matrix.
/// Missing pairs are an error; extra columns are ignored.
pub fn read_similarity_csv<R: std::io::Read>(input: R, path: &str) -> Result<SimilarityMatrix> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    let mut n = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let bad = |msg: &str| Error::Parse { path: path.into(), line, msg: msg.into() };
        if rec.len() < 3 {
            return Err(bad("expected i,j,value"));
        }
        let i: usize = rec[0].trim().parse().map_err(|_| bad("bad row index"))?;
        let j: usize = rec[1].trim().parse().map_err(|_| bad("bad column index"))?;
        let v: f64 = rec[2].trim().parse().map_err(|_| bad("bad value"))?;
        n = n.max(i + 1).max(j + 1);
        entries.push((i, j, v));
    }
    let mut values = vec![f64::NAN; n * n];
    for (i, j, v) in entries {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            msg: format!("missing pair ({}, {})", k / n, k % n),
        });
    }
    SimilarityMatrix::new(n, values)
}
