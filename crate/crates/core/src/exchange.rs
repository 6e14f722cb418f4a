//! Tensor powers, the embedding family between them, and truncated exchangeable sequences.
//!
//! The level-`n` algebra of a base algebra `A` is `A^{⊗n}`. Two kinds of base are
//! supported: a single block `B(C^d)` (level `n` is `B(C^{d^n})`) and a commutative
//! algebra on `k` points (level `n` is functions on `k^n` tuples, in lexicographic
//! order). In both cases the representation at level `n` is the Kronecker power of the
//! base representation, which is what every operation here manipulates.
//!
//! Maps between levels:
//!
//! * [`iota_embed`]: `a ↦ a ⊗ 1^{⊗(m-n)}`,
//! * [`eta_sigma_element`]: moves tensor factor `i` to slot `σ(i)`,
//! * [`eta_tau`]: places factor `i` at slot `τ(i)` of `m` slots, units elsewhere.
//!
//! On states the duals are partial traces: [`restrict_state`] traces out the last
//! `m - n` factors and [`marginal_state`] keeps slots `τ(0), ..., τ(n-1)` in order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cstar::{Algebra, Element, StateVec, Tolerances, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::json;
use crate::linalg::{self, CMat};
use crate::perm;

/// Largest level at which symmetry is checked against every permutation.
pub const EXHAUSTIVE_SYMMETRY_MAX_LEVEL: usize = 6;

/// A level of the tower `A^{⊗n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorPower {
    base: Algebra,
    level: usize,
}

fn check_base(base: &Algebra) -> Result<usize> {
    let factor = base.rep_dim();
    if factor < 2 {
        return invalid("tensor powers need a base of representation size at least 2");
    }
    if base.single_block().is_none() && !base.is_commutative() {
        return invalid(format!(
            "tensor powers need a single-block or commutative base, got {base}"
        ));
    }
    Ok(factor)
}

impl TensorPower {
    pub fn new(base: &Algebra, level: usize) -> Result<Self> {
        check_base(base)?;
        Ok(TensorPower {
            base: base.clone(),
            level,
        })
    }

    /// Identify the level of an algebra in the tower over `base`.
    pub fn of(base: &Algebra, algebra: &Algebra) -> Result<Self> {
        let factor = check_base(base)?;
        let level = linalg::level_of(factor, algebra.rep_dim()).ok_or_else(|| {
            Error::Validation(format!("{algebra} is not a tensor power of {base}"))
        })?;
        let tp = TensorPower::new(base, level)?;
        if &tp.algebra() != algebra {
            return Err(Error::AlgebraMismatch {
                expected: tp.algebra().blocks().to_vec(),
                found: algebra.blocks().to_vec(),
            });
        }
        Ok(tp)
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Representation size of one tensor factor.
    pub fn factor_dim(&self) -> usize {
        self.base.rep_dim()
    }

    /// Representation size at this level, `factor^n`.
    pub fn rep_dim(&self) -> usize {
        self.factor_dim().pow(self.level as u32)
    }

    pub fn algebra(&self) -> Algebra {
        let dim = self.rep_dim();
        let blocks = if self.base.is_commutative() {
            vec![1; dim]
        } else {
            vec![dim]
        };
        Algebra::new(blocks).expect("tensor power blocks are positive")
    }
}

/// `a ⊗ 1^{⊗(m-n)}` for `a` at level `n`.
pub fn iota_embed(base: &Algebra, a: &Element, m: usize) -> Result<Element> {
    let tp = TensorPower::of(base, a.algebra())?;
    if tp.level > m {
        return Err(Error::LevelOrder {
            from: tp.level,
            to: m,
        });
    }
    let target = TensorPower::new(base, m)?;
    let unit = linalg::identity(tp.factor_dim().pow((m - tp.level) as u32));
    Element::from_rep(&target.algebra(), &linalg::kron(&a.to_rep(), &unit))
}

/// Partial trace of a level-`m` state over its last `m - n` factors.
pub fn restrict_state(base: &Algebra, rho: &StateVec, n: usize) -> Result<StateVec> {
    let tp = TensorPower::of(base, rho.algebra())?;
    if n > tp.level {
        return Err(Error::LevelOrder {
            from: tp.level,
            to: n,
        });
    }
    let target = TensorPower::new(base, n)?;
    let reduced = restrict_rep(&rho.to_rep(), tp.factor_dim(), tp.level, n);
    StateVec::from_rep(&target.algebra(), &reduced, &Tolerances::default())
}

pub(crate) fn restrict_rep(rep: &CMat, factor: usize, m: usize, n: usize) -> CMat {
    if n == m {
        return rep.clone();
    }
    linalg::partial_trace_tail(rep, factor.pow((m - n) as u32))
}

pub(crate) fn permute_rep(rep: &CMat, factor: usize, perm: &[usize]) -> CMat {
    let map = linalg::factor_permutation_indices(factor, perm.len(), perm);
    linalg::conjugate_by_index_map(rep, &map)
}

/// `η_σ` on an element: factor `i` moves to slot `σ(i)`.
pub fn eta_sigma_element(base: &Algebra, a: &Element, sigma: &[usize]) -> Result<Element> {
    let tp = TensorPower::of(base, a.algebra())?;
    check_perm_len(sigma, tp.level)?;
    Element::from_rep(
        a.algebra(),
        &permute_rep(&a.to_rep(), tp.factor_dim(), sigma),
    )
}

/// `η_σ` pushed forward to states: the density matrix is conjugated by the same
/// permutation unitary, so subsystem `i` of the input becomes subsystem `σ(i)`.
pub fn eta_sigma_state(base: &Algebra, s: &StateVec, sigma: &[usize]) -> Result<StateVec> {
    let tp = TensorPower::of(base, s.algebra())?;
    check_perm_len(sigma, tp.level)?;
    StateVec::from_rep(
        s.algebra(),
        &permute_rep(&s.to_rep(), tp.factor_dim(), sigma),
        &Tolerances::default(),
    )
}

fn check_perm_len(sigma: &[usize], level: usize) -> Result<()> {
    perm::validate_permutation(sigma)?;
    if sigma.len() != level {
        return Err(Error::InvalidPermutation(sigma.to_vec()));
    }
    Ok(())
}

/// Place factor `i` of a level-`n` element at slot `τ(i)` of level `m`, units elsewhere.
pub fn eta_tau(base: &Algebra, a: &Element, tau: &[usize], m: usize) -> Result<Element> {
    let tp = TensorPower::of(base, a.algebra())?;
    if tau.len() != tp.level {
        return Err(Error::InvalidInjection {
            tau: tau.to_vec(),
            m,
        });
    }
    perm::validate_injection(tau, m)?;
    let padded = iota_embed(base, a, m)?;
    let full = perm::extend_injection(tau, m);
    Element::from_rep(
        padded.algebra(),
        &permute_rep(&padded.to_rep(), tp.factor_dim(), &full),
    )
}

/// The state dual to [`eta_tau`]: `eval(marginal(ρ, τ), a) = eval(ρ, η_τ(a))`.
pub fn marginal_state(base: &Algebra, rho: &StateVec, tau: &[usize]) -> Result<StateVec> {
    let tp = TensorPower::of(base, rho.algebra())?;
    perm::validate_injection(tau, tp.level)?;
    let target = TensorPower::new(base, tau.len())?;
    let reduced = marginal_rep(&rho.to_rep(), tp.factor_dim(), tp.level, tau);
    StateVec::from_rep(&target.algebra(), &reduced, &Tolerances::default())
}

pub(crate) fn marginal_rep(rep: &CMat, factor: usize, m: usize, tau: &[usize]) -> CMat {
    let full = perm::extend_injection(tau, m);
    let moved = permute_rep(rep, factor, &perm::inverse(&full));
    restrict_rep(&moved, factor, m, tau.len())
}

/// The finite shadow `(ρ_1, ..., ρ_N)` of an exchangeable state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchSeq {
    base: Algebra,
    states: Vec<StateVec>,
    tol: f64,
}

impl ExchSeq {
    /// `states[n-1]` must be a state on level `n`.
    pub fn new(base: Algebra, states: Vec<StateVec>, tol: f64) -> Result<Self> {
        if states.is_empty() {
            return invalid("an exchangeable sequence needs at least one level");
        }
        if tol.is_nan() || tol <= 0.0 {
            return invalid("tolerance must be positive");
        }
        for (i, s) in states.iter().enumerate() {
            let tp = TensorPower::of(&base, s.algebra())?;
            if tp.level != i + 1 {
                return invalid(format!(
                    "state {} lives on level {}, expected {}",
                    i,
                    tp.level,
                    i + 1
                ));
            }
        }
        Ok(ExchSeq { base, states, tol })
    }

    /// Build from per-level representation matrices.
    pub fn from_reps(base: Algebra, reps: &[CMat], tol: f64) -> Result<Self> {
        let state_tol = Tolerances::uniform(tol.max(DEFAULT_TOL));
        let states = reps
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let alg = TensorPower::new(&base, i + 1)?.algebra();
                StateVec::from_rep(&alg, r, &state_tol)
                    .map_err(|e| Error::Validation(format!("level {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        ExchSeq::new(base, states, tol)
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    /// The state at level `n` (1-based).
    pub fn level(&self, n: usize) -> &StateVec {
        &self.states[n - 1]
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Keep only the first `depth` levels.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth() {
            return invalid(format!("cannot truncate depth {} to {depth}", self.depth()));
        }
        Ok(ExchSeq {
            base: self.base.clone(),
            states: self.states[..depth].to_vec(),
            tol: self.tol,
        })
    }

    pub fn reps(&self) -> Vec<CMat> {
        self.states.iter().map(StateVec::to_rep).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ExchSeqJson {
    base_dim: usize,
    depth: usize,
    #[serde(with = "json::matrices")]
    states: Vec<CMat>,
    tol: f64,
}

impl Serialize for ExchSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExchSeqJson {
            base_dim: self.base.rep_dim(),
            depth: self.depth(),
            states: self.reps(),
            tol: self.tol,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExchSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ExchSeqJson::deserialize(d)?;
        if j.depth != j.states.len() {
            return Err(serde::de::Error::custom(format!(
                "depth {} does not match {} states",
                j.depth,
                j.states.len()
            )));
        }
        let base = Algebra::matrix(j.base_dim).map_err(serde::de::Error::custom)?;
        ExchSeq::from_reps(base, &j.states, j.tol).map_err(serde::de::Error::custom)
    }
}

/// Per-level result of [`check_exchangeable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    /// `max_σ ‖ρ_n − η_σ(ρ_n)‖_1`.
    pub symmetry_violation: f64,
    pub worst_permutation: Option<Vec<usize>>,
    pub permutations_checked: usize,
    pub exhaustive: bool,
    /// `max_{m > n} ‖ρ_n − restrict(ρ_m, n)‖_1`.
    pub consistency_violation: f64,
    pub worst_consistency_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub tolerance: f64,
    pub levels: Vec<LevelReport>,
    pub verdict: bool,
}

impl ExchangeReport {
    pub fn worst_violation(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.symmetry_violation.max(l.consistency_violation))
            .fold(0.0, f64::max)
    }

    /// Human-readable lines, one per level.
    pub fn describe(&self) -> Vec<String> {
        self.levels
            .iter()
            .map(|l| {
                let mut line = format!(
                    "level {}: symmetry {:.3e} ({} permutations{}), consistency {:.3e}",
                    l.level,
                    l.symmetry_violation,
                    l.permutations_checked,
                    if l.exhaustive { "" } else { ", generators" },
                    l.consistency_violation
                );
                if l.symmetry_violation > self.tolerance {
                    if let Some(p) = &l.worst_permutation {
                        line += &format!(" VIOLATED by permutation {}", perm::display_one_based(p));
                        if let Some((a, b)) = transposition_pair(p) {
                            line += &format!(" (transposition {} {})", a + 1, b + 1);
                        }
                    }
                }
                if l.consistency_violation > self.tolerance {
                    if let Some(m) = l.worst_consistency_level {
                        line += &format!(" INCONSISTENT with level {m}");
                    }
                }
                line
            })
            .collect()
    }
}

fn transposition_pair(p: &[usize]) -> Option<(usize, usize)> {
    let moved: Vec<usize> = (0..p.len()).filter(|&i| p[i] != i).collect();
    (moved.len() == 2).then(|| (moved[0], moved[1]))
}

/// Symmetry of every level under `S_n` and consistency under partial traces.
///
/// Levels up to [`EXHAUSTIVE_SYMMETRY_MAX_LEVEL`] are checked against every
/// permutation; deeper levels against the adjacent transpositions only.
pub fn check_exchangeable(seq: &ExchSeq) -> ExchangeReport {
    let factor = seq.base.rep_dim();
    let reps = seq.reps();
    let depth = reps.len();
    let levels: Vec<LevelReport> = (1..=depth)
        .into_par_iter()
        .map(|n| {
            let rho = &reps[n - 1];
            let exhaustive = n <= EXHAUSTIVE_SYMMETRY_MAX_LEVEL;
            let perms = if exhaustive {
                perm::all_permutations(n)
            } else {
                perm::adjacent_transpositions(n)
            };
            let mut symmetry_violation = 0.0;
            let mut worst_permutation = None;
            for p in &perms {
                if p.iter().enumerate().all(|(i, &x)| i == x) {
                    continue;
                }
                let v = linalg::trace_norm(&(rho - permute_rep(rho, factor, p)));
                if v > symmetry_violation || worst_permutation.is_none() {
                    symmetry_violation = v;
                    worst_permutation = Some(p.clone());
                }
            }
            let mut consistency_violation = 0.0;
            let mut worst_consistency_level = None;
            for m in (n + 1)..=depth {
                let v = linalg::trace_norm(&(rho - restrict_rep(&reps[m - 1], factor, m, n)));
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
        .collect();
    let verdict = levels
        .iter()
        .all(|l| l.symmetry_violation <= seq.tol && l.consistency_violation <= seq.tol);
    ExchangeReport {
        tolerance: seq.tol,
        levels,
        verdict,
    }
}

/// `(σ^{⊗n})_{n ≤ N}`.
pub fn iid_extend(sigma: &StateVec, depth: usize) -> Result<ExchSeq> {
    if depth < 1 {
        return invalid("depth must be at least 1");
    }
    let base = sigma.algebra().clone();
    check_base(&base)?;
    let rep = sigma.to_rep();
    let mut power = linalg::identity(1);
    let mut reps = Vec::with_capacity(depth);
    for _ in 0..depth {
        power = linalg::kron(&power, &rep);
        reps.push(power.clone());
    }
    ExchSeq::from_reps(base, &reps, DEFAULT_TOL)
}
