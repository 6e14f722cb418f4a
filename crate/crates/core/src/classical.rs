//! Finite probability: the distribution monad, Markov kernels, exchangeable
//! measures on `X^n` and the recovery of their mixing measure over a grid of
//! candidate distributions.
//!
//! Tuples in `X^n` are enumerated lexicographically, first coordinate most
//! significant, which matches the Kronecker order used on the quantum side. The
//! commutative encoding ([`ClassicalExchSeq::to_exch_seq`], [`grid_atoms`]) turns
//! the classical problems into quantum ones on the all-1-blocks algebra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cstar::{Algebra, StateVec, DEFAULT_TOL};
use crate::definetti::{self, AtomSet, Cone, ReconstructOptions, UniquenessReport};
use crate::error::{invalid, Error, Result};
use crate::exchange::{ExchSeq, ExchangeReport, LevelReport, EXHAUSTIVE_SYMMETRY_MAX_LEVEL};
use crate::linalg;
use crate::nnls;
use crate::perm;

/// Tolerance on nonnegativity and normalization of probability vectors.
pub const WEIGHT_TOL: f64 = 1e-9;

/// A finitely supported distribution over values of any type.
///
/// Equal outcomes are merged, so two distributions compare by their probability
/// functions through [`Dist::distance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<T> {
    outcomes: Vec<(T, f64)>,
}

impl<T: Clone + PartialEq> Dist<T> {
    pub fn new(pairs: Vec<(T, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return invalid("a distribution needs at least one outcome");
        }
        if let Some((_, p)) = pairs.iter().find(|(_, p)| *p < -WEIGHT_TOL || p.is_nan()) {
            return invalid(format!("negative probability {p}"));
        }
        let total: f64 = pairs.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return invalid(format!("probabilities sum to {total}"));
        }
        Ok(Self::merged(
            pairs.into_iter().map(|(x, p)| (x, p.max(0.0))),
        ))
    }

    fn merged(pairs: impl IntoIterator<Item = (T, f64)>) -> Self {
        let mut outcomes: Vec<(T, f64)> = Vec::new();
        for (x, p) in pairs {
            match outcomes.iter_mut().find(|(y, _)| *y == x) {
                Some((_, q)) => *q += p,
                None => outcomes.push((x, p)),
            }
        }
        Dist { outcomes }
    }

    pub fn dirac(x: T) -> Self {
        Dist {
            outcomes: vec![(x, 1.0)],
        }
    }

    pub fn outcomes(&self) -> &[(T, f64)] {
        &self.outcomes
    }

    pub fn prob(&self, x: &T) -> f64 {
        self.outcomes
            .iter()
            .filter(|(y, _)| y == x)
            .map(|(_, p)| p)
            .sum()
    }

    /// Pushforward along `f`.
    pub fn map<U: Clone + PartialEq>(&self, f: impl Fn(&T) -> U) -> Dist<U> {
        Dist::merged(self.outcomes.iter().map(|(x, p)| (f(x), *p)))
    }

    pub fn bind<U: Clone + PartialEq>(&self, f: impl Fn(&T) -> Dist<U>) -> Dist<U> {
        Dist::merged(
            self.outcomes
                .iter()
                .flat_map(|(x, p)| f(x).outcomes.into_iter().map(move |(y, q)| (y, p * q))),
        )
    }

    /// `max_x |p(x) − q(x)|`.
    pub fn distance(&self, other: &Dist<T>) -> f64 {
        self.outcomes
            .iter()
            .chain(&other.outcomes)
            .map(|(x, _)| (self.prob(x) - other.prob(x)).abs())
            .fold(0.0, f64::max)
    }
}

impl<T: Clone + PartialEq> Dist<Dist<T>> {
    /// Average the inner distributions by the outer weights.
    pub fn flatten(&self) -> Dist<T> {
        self.bind(Clone::clone)
    }
}

/// A probability vector on a labeled finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FinDistJson")]
pub struct FinDist {
    space: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct FinDistJson {
    space: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<FinDistJson> for FinDist {
    type Error = Error;

    fn try_from(j: FinDistJson) -> Result<Self> {
        FinDist::new(j.space, j.probs)
    }
}

fn check_space(space: &[String]) -> Result<()> {
    if space.is_empty() {
        return invalid("a sample space needs at least one label");
    }
    for (i, a) in space.iter().enumerate() {
        if space[..i].contains(a) {
            return invalid(format!("label {a:?} appears twice"));
        }
    }
    Ok(())
}

fn check_probs(probs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if let Some(p) = probs.iter().find(|p| **p < -tol || p.is_nan()) {
        return invalid(format!("negative probability {p}"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol {
        return invalid(format!("probabilities sum to {total}"));
    }
    Ok(probs.iter().map(|p| p.max(0.0)).collect())
}

pub fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Labels of `X^n` in lexicographic order, coordinates joined by commas.
pub fn product_space(space: &[String], n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|prefix| {
                space.iter().map(move |x| {
                    if prefix.is_empty() {
                        x.clone()
                    } else {
                        format!("{prefix},{x}")
                    }
                })
            })
            .collect();
    }
    out
}

impl FinDist {
    pub fn new(space: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        check_space(&space)?;
        if probs.len() != space.len() {
            return invalid(format!(
                "{} probabilities for {} labels",
                probs.len(),
                space.len()
            ));
        }
        let probs = check_probs(&probs, WEIGHT_TOL)?;
        Ok(FinDist { space, probs })
    }

    pub fn dirac(space: Vec<String>, index: usize) -> Result<Self> {
        if index >= space.len() {
            return invalid(format!("outcome {index} out of range"));
        }
        let mut probs = vec![0.0; space.len()];
        probs[index] = 1.0;
        FinDist::new(space, probs)
    }

    pub fn uniform(space: Vec<String>) -> Result<Self> {
        let k = space.len() as f64;
        let probs = vec![1.0 / k; space.len()];
        FinDist::new(space, probs)
    }

    /// A coin on `{H, T}` with `P(H) = bias`.
    pub fn coin(bias: f64) -> Result<Self> {
        FinDist::new(labels(&["H", "T"]), vec![bias, 1.0 - bias])
    }

    pub fn space(&self) -> &[String] {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn to_dist(&self) -> Dist<usize> {
        Dist::merged(self.probs.iter().copied().enumerate())
    }

    pub fn from_dist(space: Vec<String>, d: &Dist<usize>) -> Result<Self> {
        let mut probs = vec![0.0; space.len()];
        for &(x, p) in d.outcomes() {
            if x >= probs.len() {
                return invalid(format!(
                    "outcome {x} outside a space of size {}",
                    probs.len()
                ));
            }
            probs[x] += p;
        }
        FinDist::new(space, probs)
    }

    /// `f_* μ` for `f` given as an index map into `target`.
    pub fn pushforward(&self, target: Vec<String>, f: impl Fn(usize) -> usize) -> Result<Self> {
        FinDist::from_dist(target, &self.to_dist().map(|&x| f(x)))
    }

    /// Average of the inner distributions, which must share one space.
    pub fn flatten(outer: &Dist<FinDist>) -> Result<Self> {
        let space = outer.outcomes()[0].0.space.clone();
        if outer.outcomes().iter().any(|(d, _)| d.space != space) {
            return invalid("flatten needs distributions on a common space");
        }
        let mut probs = vec![0.0; space.len()];
        for (d, w) in outer.outcomes() {
            for (p, q) in probs.iter_mut().zip(&d.probs) {
                *p += w * q;
            }
        }
        FinDist::new(space, probs)
    }

    /// `μ^{⊗n}` on `X^n`.
    pub fn product(&self, n: usize) -> Result<FinDist> {
        if n < 1 {
            return invalid("product power must be at least 1");
        }
        FinDist::new(product_space(&self.space, n), product_probs(&self.probs, n))
    }

    /// `Σ_x |p(x) − q(x)|`.
    pub fn l1_distance(&self, other: &FinDist) -> Result<f64> {
        if self.space != other.space {
            return invalid("distributions live on different spaces");
        }
        Ok(l1(&self.probs, &other.probs))
    }
}

pub fn dirac(space: Vec<String>, index: usize) -> Result<FinDist> {
    FinDist::dirac(space, index)
}

pub fn product_measure(mu: &FinDist, n: usize) -> Result<FinDist> {
    mu.product(n)
}

fn product_probs(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|a| p.iter().map(move |b| a * b))
            .collect();
    }
    out
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// A Markov kernel `X → Dist(Y)`: one distribution on the target per source label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    source: Vec<String>,
    target: Vec<String>,
    rows: Vec<FinDist>,
}

impl Kernel {
    pub fn new(source: Vec<String>, target: Vec<String>, rows: Vec<FinDist>) -> Result<Self> {
        check_space(&source)?;
        check_space(&target)?;
        if rows.len() != source.len() {
            return invalid(format!(
                "{} rows for {} source labels",
                rows.len(),
                source.len()
            ));
        }
        if rows.iter().any(|r| r.space != target) {
            return invalid("every row must be a distribution on the target");
        }
        Ok(Kernel {
            source,
            target,
            rows,
        })
    }

    /// Kernel from a row-stochastic matrix.
    pub fn from_matrix(source: Vec<String>, target: Vec<String>, m: &[Vec<f64>]) -> Result<Self> {
        let rows = m
            .iter()
            .map(|r| FinDist::new(target.clone(), r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(source, target, rows)
    }

    /// `x ↦ δ_x`.
    pub fn identity(space: Vec<String>) -> Result<Self> {
        let rows = (0..space.len())
            .map(|i| FinDist::dirac(space.clone(), i))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(space.clone(), space, rows)
    }

    pub fn source(&self) -> &[String] {
        &self.source
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }

    pub fn rows(&self) -> &[FinDist] {
        &self.rows
    }

    /// `μ ↦ Σ_x μ(x) k(x)`.
    pub fn apply(&self, mu: &FinDist) -> Result<FinDist> {
        if mu.space != self.source {
            return invalid("distribution does not live on the kernel's source");
        }
        let outer = Dist::merged(self.rows.iter().cloned().zip(mu.probs.iter().copied()));
        FinDist::flatten(&outer)
    }

    /// First `self`, then `next`.
    pub fn then(&self, next: &Kernel) -> Result<Kernel> {
        if self.target != next.source {
            return invalid("kernel target and source do not match");
        }
        let rows = self
            .rows
            .iter()
            .map(|r| next.apply(r))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(self.source.clone(), next.target.clone(), rows)
    }

    pub fn max_distance(&self, other: &Kernel) -> Result<f64> {
        if self.source != other.source || self.target != other.target {
            return invalid("kernels have different shapes");
        }
        Ok(self
            .rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

/// Kleisli composite `X → Y → Z`.
pub fn kleisli_compose(f: &Kernel, g: &Kernel) -> Result<Kernel> {
    f.then(g)
}

/// `ζ_τ`: law of `(x_{τ(0)}, ..., x_{τ(n-1)})` under a measure on `X^m`.
pub fn select_marginal(probs: &[f64], k: usize, m: usize, tau: &[usize]) -> Result<Vec<f64>> {
    perm::validate_injection(tau, m)?;
    if probs.len() != k.pow(m as u32) {
        return invalid(format!(
            "{} probabilities do not describe X^{m} with |X| = {k}",
            probs.len()
        ));
    }
    let n = tau.len();
    let mut out = vec![0.0; k.pow(n as u32)];
    let mut digits = vec![0usize; m];
    for (x, &p) in probs.iter().enumerate() {
        let mut rest = x;
        for d in digits.iter_mut().rev() {
            *d = rest % k;
            rest /= k;
        }
        let y = tau.iter().fold(0, |acc, &t| acc * k + digits[t]);
        out[y] += p;
    }
    Ok(out)
}

fn permute_probs(probs: &[f64], k: usize, sigma: &[usize]) -> Vec<f64> {
    let map = linalg::factor_permutation_indices(k, sigma.len(), sigma);
    let mut out = vec![0.0; probs.len()];
    for (x, &p) in probs.iter().enumerate() {
        out[map[x]] = p;
    }
    out
}

/// Measures `μ_n` on `X^n`, `n = 1..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassicalJson")]
pub struct ClassicalExchSeq {
    space: Vec<String>,
    levels: Vec<Vec<f64>>,
    tol: f64,
}

#[derive(Deserialize)]
struct ClassicalJson {
    space: Vec<String>,
    levels: Vec<Vec<f64>>,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl TryFrom<ClassicalJson> for ClassicalExchSeq {
    type Error = Error;

    fn try_from(j: ClassicalJson) -> Result<Self> {
        ClassicalExchSeq::new(j.space, j.levels, j.tol)
    }
}

impl ClassicalExchSeq {
    /// Every level must be a probability vector of length `|X|^n`.
    pub fn new(space: Vec<String>, levels: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        check_space(&space)?;
        if levels.is_empty() {
            return invalid("a sequence needs at least one level");
        }
        if tol.is_nan() || tol <= 0.0 {
            return invalid("tolerance must be positive");
        }
        let k = space.len();
        let levels = levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let n = i + 1;
                if l.len() != k.pow(n as u32) {
                    return invalid(format!(
                        "level {n} has {} entries, expected {}",
                        l.len(),
                        k.pow(n as u32)
                    ));
                }
                check_probs(l, tol.max(WEIGHT_TOL))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassicalExchSeq { space, levels, tol })
    }

    /// `(μ^{⊗n})_{n ≤ N}`.
    pub fn iid(mu: &FinDist, depth: usize) -> Result<Self> {
        ClassicalExchSeq::mixture(std::slice::from_ref(mu), &[1.0], depth)
    }

    /// `(Σ_k w_k p_k^{⊗n})_{n ≤ N}`.
    pub fn mixture(grid: &[FinDist], weights: &[f64], depth: usize) -> Result<Self> {
        let space = grid_space(grid)?;
        if weights.len() != grid.len() {
            return invalid(format!(
                "{} weights for {} grid points",
                weights.len(),
                grid.len()
            ));
        }
        let weights = check_probs(weights, WEIGHT_TOL)?;
        if depth < 1 {
            return invalid("depth must be at least 1");
        }
        let levels = (1..=depth)
            .map(|n| {
                let mut level = vec![0.0; space.len().pow(n as u32)];
                for (p, &w) in grid.iter().zip(&weights) {
                    for (a, b) in level.iter_mut().zip(product_probs(&p.probs, n)) {
                        *a += w * b;
                    }
                }
                level
            })
            .collect();
        ClassicalExchSeq::new(space, levels, DEFAULT_TOL)
    }

    pub fn space(&self) -> &[String] {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// The first `depth` levels.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth() {
            return invalid(format!("cannot truncate depth {} to {depth}", self.depth()));
        }
        ClassicalExchSeq::new(self.space.clone(), self.levels[..depth].to_vec(), self.tol)
    }

    /// `μ_n` as a distribution on `X^n`.
    pub fn level(&self, n: usize) -> Result<FinDist> {
        FinDist::new(product_space(&self.space, n), self.levels[n - 1].clone())
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Permutation invariance and marginal consistency, in the same report shape
    /// as the quantum check (distances are `ℓ1`, the trace norm of diagonal matrices).
    pub fn check(&self) -> ExchangeReport {
        let k = self.space.len();
        let depth = self.depth();
        let levels = (1..=depth)
            .map(|n| {
                let mu = &self.levels[n - 1];
                let exhaustive = n <= EXHAUSTIVE_SYMMETRY_MAX_LEVEL;
                let perms = if exhaustive {
                    perm::all_permutations(n)
                } else {
                    perm::adjacent_transpositions(n)
                };
                let mut symmetry_violation = 0.0;
                let mut worst_permutation = None;
                for p in perms.iter().filter(|p| **p != perm::identity(n)) {
                    let v = l1(mu, &permute_probs(mu, k, p));
                    if v > symmetry_violation || worst_permutation.is_none() {
                        symmetry_violation = v;
                        worst_permutation = Some(p.clone());
                    }
                }
                let mut consistency_violation = 0.0;
                let mut worst_consistency_level = None;
                for m in (n + 1)..=depth {
                    let marg = select_marginal(&self.levels[m - 1], k, m, &perm::identity(n))
                        .expect("identity prefix is a valid injection");
                    let v = l1(mu, &marg);
                    if v > consistency_violation || worst_consistency_level.is_none() {
                        consistency_violation = v;
                        worst_consistency_level = Some(m);
                    }
                }
                LevelReport {
                    level: n,
                    symmetry_violation,
                    worst_permutation,
                    permutations_checked: perms.len(),
                    exhaustive,
                    consistency_violation,
                    worst_consistency_level,
                }
            })
            .collect::<Vec<_>>();
        let verdict = levels
            .iter()
            .all(|l| l.symmetry_violation <= self.tol && l.consistency_violation <= self.tol);
        ExchangeReport {
            tolerance: self.tol,
            levels,
            verdict,
        }
    }

    /// The same data as diagonal states on the all-1-blocks algebra `C(X)^{⊗n}`.
    pub fn to_exch_seq(&self) -> Result<ExchSeq> {
        let base = Algebra::classical(self.space.len())?;
        let reps: Vec<_> = self.levels.iter().map(|l| linalg::diag_real(l)).collect();
        ExchSeq::from_reps(base, &reps, self.tol)
    }
}

fn grid_space(grid: &[FinDist]) -> Result<Vec<String>> {
    let Some(first) = grid.first() else {
        return invalid("empty grid");
    };
    if grid.iter().any(|p| p.space != first.space) {
        return invalid("grid distributions live on different spaces");
    }
    Ok(first.space.clone())
}

/// All distributions on `space` with probabilities in `{0, 1/r, …, 1}`, in lexicographic
/// order of the count vectors.
pub fn simplex_grid(space: &[String], resolution: usize) -> Result<Vec<FinDist>> {
    check_space(space)?;
    if resolution == 0 {
        return invalid("grid resolution must be at least 1");
    }
    fn fill(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            fill(k - 1, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    fill(space.len(), resolution, &mut Vec::new(), &mut counts);
    counts
        .into_iter()
        .map(|c| {
            let probs = c.iter().map(|&x| x as f64 / resolution as f64).collect();
            FinDist::new(space.to_vec(), probs)
        })
        .collect()
}

/// Number of points of [`simplex_grid`]: `C(r + k − 1, k − 1)`.
pub fn simplex_grid_size(outcomes: usize, resolution: usize) -> usize {
    (1..outcomes).fold(1usize, |acc, i| acc.saturating_mul(resolution + i) / i)
}

/// The grid as atoms on the commutative algebra `C(X)`.
pub fn grid_atoms(grid: &[FinDist]) -> Result<AtomSet> {
    grid_space(grid)?;
    let atoms = grid
        .iter()
        .map(|p| StateVec::from_probabilities(&p.probs))
        .collect::<Result<Vec<_>>>()?;
    AtomSet::explicit(atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsReconstruction {
    pub grid: Vec<FinDist>,
    pub weights: Vec<f64>,
    /// `sqrt(Σ_n ‖μ_n − Σ_k w_k p_k^{⊗n}‖_2²)`.
    pub residual: f64,
    pub raw_weight_sum: f64,
}

/// Best mixture of product measures over `grid`, with the same solver as
/// [`definetti::reconstruct`].
pub fn hs_reconstruct(
    seq: &ClassicalExchSeq,
    grid: &[FinDist],
    opts: &ReconstructOptions,
) -> Result<HsReconstruction> {
    let space = grid_space(grid)?;
    if space != seq.space {
        return invalid("grid and sequence live on different spaces");
    }
    let report = seq.check();
    if !report.verdict {
        return Err(Error::NotExchangeable(Box::new(report)));
    }
    let columns: Vec<Vec<f64>> = grid
        .iter()
        .map(|p| {
            (1..=seq.depth())
                .flat_map(|n| product_probs(&p.probs, n))
                .collect()
        })
        .collect();
    let rows = columns[0].len();
    let design = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let target = DVector::from_iterator(rows, seq.levels.iter().flatten().copied());
    let fit = nnls::simplex_lsq(&design, &target, &opts.solver, None)?;
    Ok(HsReconstruction {
        grid: grid.to_vec(),
        weights: fit.weights,
        residual: fit.residual,
        raw_weight_sum: fit.raw_sum,
    })
}

/// Moment degeneracy and restart stability of [`hs_reconstruct`], via the commutative encoding.
pub fn hs_uniqueness(
    seq: &ClassicalExchSeq,
    grid: &[FinDist],
    trials: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    let cone = Cone::from_sequence(&seq.to_exch_seq()?)?;
    definetti::uniqueness_check(&cone, &grid_atoms(grid)?, trials, seed)
}
