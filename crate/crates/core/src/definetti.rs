//! Mixtures of iid sequences, their reconstruction, and factorization of cones.
//!
//! An exchangeable sequence `(ρ_n)` is represented over a finite [`AtomSet`]
//! `{σ_k}` when `ρ_n = Σ_k w_k σ_k^{⊗n}` for a probability vector `w`. The
//! [`reconstruct`] operation finds `w` by minimizing
//! `Σ_{n ≤ N} ‖ρ_n − Σ_k w_k σ_k^{⊗n}‖_F²` over the simplex.
//!
//! A [`Cone`] is a family of channels `Φ_n : K → A^{⊗n}` compatible with every
//! injection of tensor slots. [`mediating_map`] factors such a family through
//! measures on the atom set: each probe state `κ` of the apex is sent to the
//! mixture representing `(Φ_n(κ))_n`, and arbitrary states are handled by linearity.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpmaps::{ChoiMap, Direction};
use crate::cstar::{Algebra, StateVec, Tolerances, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::exchange::{
    self, check_exchangeable, ExchSeq, TensorPower, EXHAUSTIVE_SYMMETRY_MAX_LEVEL,
};
use crate::json;
use crate::linalg::{self, c, CMat};
use crate::nnls::{self, SimplexFit, SimplexOptions};
use crate::perm;

/// Minimum trace-norm separation between atoms of a checked [`AtomSet`].
pub const ATOM_SEPARATION: f64 = 1e-6;
/// Relative singular-value cutoff for moment-rank decisions.
pub const MOMENT_RANK_RTOL: f64 = 1e-10;
/// Share of pure states in [`default_atoms`].
pub const PURE_FRACTION: f64 = 0.7;
/// Weight vectors closer than this (max norm) count as the same solution.
pub const UNIQUENESS_TOL: f64 = 1e-8;
/// Ridge weight for [`ReconstructOptions::min_norm`] that still registers above the
/// solver's stopping tolerance.
pub const MIN_NORM_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AtomOrigin {
    Explicit,
    Random {
        seed: u64,
        pure: usize,
        mixed: usize,
    },
}

/// A finite stand-in for the state space of the base algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSet {
    base: Algebra,
    atoms: Vec<StateVec>,
    origin: AtomOrigin,
}

impl AtomSet {
    /// Atoms given explicitly; they must be pairwise separated by more than [`ATOM_SEPARATION`].
    pub fn explicit(atoms: Vec<StateVec>) -> Result<Self> {
        let set = Self::explicit_allow_duplicates(atoms)?;
        for i in 0..set.atoms.len() {
            for j in (i + 1)..set.atoms.len() {
                let dist = set.atoms[i].trace_distance(&set.atoms[j])?;
                if dist <= ATOM_SEPARATION {
                    return invalid(format!("atoms {i} and {j} coincide (distance {dist:.3e})"));
                }
            }
        }
        Ok(set)
    }

    /// Atoms given explicitly, without the separation check. Useful for degeneracy diagnostics.
    pub fn explicit_allow_duplicates(atoms: Vec<StateVec>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return invalid("an atom set needs at least one atom");
        };
        let base = first.algebra().clone();
        TensorPower::new(&base, 1)?;
        if let Some(bad) = atoms.iter().position(|a| a.algebra() != &base) {
            return invalid(format!("atom {bad} lives on a different algebra"));
        }
        Ok(AtomSet {
            base,
            atoms,
            origin: AtomOrigin::Explicit,
        })
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn atoms(&self) -> &[StateVec] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn origin(&self) -> &AtomOrigin {
        &self.origin
    }

    /// Columns `(σ_k^{⊗n})_{n ≤ depth}` in Frobenius-orthonormal real coordinates.
    pub fn moment_matrix(&self, depth: usize) -> DMatrix<f64> {
        let commutative = self.base.is_commutative();
        let columns: Vec<Vec<f64>> = self
            .atoms
            .iter()
            .map(|a| {
                let rep = a.to_rep();
                let mut power = linalg::identity(1);
                let mut col = Vec::new();
                for _ in 0..depth {
                    power = linalg::kron(&power, &rep);
                    col.extend(level_coordinates(&power, commutative));
                }
                col
            })
            .collect();
        let rows = columns.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Atom reordering, e.g. for relabeling checks.
    pub fn permuted(&self, order: &[usize]) -> Result<AtomSet> {
        perm::validate_permutation(order)?;
        if order.len() != self.len() {
            return Err(Error::InvalidPermutation(order.to_vec()));
        }
        Ok(AtomSet {
            base: self.base.clone(),
            atoms: order.iter().map(|&i| self.atoms[i].clone()).collect(),
            origin: self.origin.clone(),
        })
    }
}

pub(crate) fn level_coordinates(rep: &CMat, commutative: bool) -> Vec<f64> {
    if commutative {
        rep.diagonal().iter().map(|z| z.re).collect()
    } else {
        linalg::hermitian_coordinates(rep)
    }
}

fn stacked_coordinates(reps: &[CMat], commutative: bool) -> DVector<f64> {
    let v: Vec<f64> = reps
        .iter()
        .flat_map(|r| level_coordinates(r, commutative))
        .collect();
    DVector::from_vec(v)
}

/// Seeded atoms on `B(C^d)`: Haar-random pure states followed by Hilbert–Schmidt
/// random mixed states, 70/30.
///
/// Each draw is expanded into its orbit under the `d²` Weyl–Heisenberg unitaries
/// (the Pauli group for qubits), truncated to the requested count. Every atom is
/// still distributed by the Haar or Hilbert–Schmidt measure, and full orbits make the
/// atom set unbiased: fits of unitarily invariant sequences such as `(I/d)^{⊗n}`
/// then have barycenter exactly `I/d`.
pub fn default_atoms(d: usize, count: usize, seed: u64) -> Result<AtomSet> {
    if count < 1 {
        return invalid("atom count must be at least 1");
    }
    if d < 2 {
        return invalid("atoms need a base of dimension at least 2");
    }
    let pure = ((count as f64) * PURE_FRACTION).round() as usize;
    let mixed = count - pure;
    let group = weyl_heisenberg(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut atoms = Vec::with_capacity(count + group.len());
    while atoms.len() < pure {
        let psi: Vec<_> = (0..d).map(|_| c(gauss(), gauss())).collect();
        let rho = StateVec::pure(&psi)?;
        atoms.extend(orbit(&group, rho.density()));
    }
    atoms.truncate(pure);
    while atoms.len() < count {
        let g = CMat::from_fn(d, d, |_, _| c(gauss(), gauss()));
        let w = &g * g.adjoint();
        let tr = linalg::trace(&w).re;
        atoms.extend(orbit(&group, &w.unscale(tr)));
    }
    atoms.truncate(count);
    let atoms = atoms
        .into_iter()
        .map(StateVec::from_density)
        .collect::<Result<Vec<_>>>()?;
    let mut set = AtomSet::explicit(atoms)?;
    set.origin = AtomOrigin::Random { seed, pure, mixed };
    Ok(set)
}

/// `X^a Z^b` for the shift `X|j⟩ = |j+1⟩` and clock `Z|j⟩ = ω^j|j⟩`.
fn weyl_heisenberg(d: usize) -> Vec<CMat> {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            out.push(CMat::from_fn(d, d, |i, j| {
                if i == (j + a) % d {
                    let phase = omega * (b * j) as f64;
                    c(phase.cos(), phase.sin())
                } else {
                    linalg::ZERO
                }
            }));
        }
    }
    out
}

fn orbit(group: &[CMat], rho: &CMat) -> Vec<CMat> {
    group
        .iter()
        .map(|u| linalg::hermitian_part(&(u * rho * u.adjoint())))
        .collect()
}

/// Rank structure of the moment vectors of an atom set at a given depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAnalysis {
    pub depth: usize,
    pub atom_count: usize,
    pub rank: usize,
    /// Atoms whose weight is pinned down by the moments (orthogonal to every null vector).
    pub determined: Vec<bool>,
    pub smallest_singular_value: f64,
}

impl MomentAnalysis {
    pub fn independent(&self) -> bool {
        self.rank == self.atom_count
    }
}

pub fn moment_analysis(atoms: &AtomSet, depth: usize) -> MomentAnalysis {
    let m = atoms.moment_matrix(depth);
    let k = atoms.len();
    // left singular vectors of Mᵀ span the row space of M
    let svd = m.transpose().svd(true, false);
    let s = &svd.singular_values;
    let s_max = s.max();
    let rank = s.iter().filter(|&&v| v > MOMENT_RANK_RTOL * s_max).count();
    let u = svd.u.as_ref().unwrap();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let determined = (0..k)
        .map(|i| {
            let in_row_space: f64 = order[..rank].iter().map(|&j| u[(i, j)] * u[(i, j)]).sum();
            (1.0 - in_row_space).abs() < 1e-8
        })
        .collect();
    let smallest_singular_value = if rank == k {
        order.last().map_or(0.0, |&j| s[j])
    } else {
        0.0
    };
    MomentAnalysis {
        depth,
        atom_count: k,
        rank,
        determined,
        smallest_singular_value,
    }
}

/// A finitely supported probability measure on an atom set.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    atoms: AtomSet,
    weights: Vec<f64>,
}

impl Mixture {
    /// Weights must be nonnegative and sum to one within `tol`; tiny negatives are clamped.
    pub fn new(atoms: AtomSet, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.len() != atoms.len() {
            return invalid(format!(
                "{} weights for {} atoms",
                weights.len(),
                atoms.len()
            ));
        }
        if let Some(w) = weights.iter().find(|w| **w < -tol || w.is_nan()) {
            return invalid(format!("negative weight {w}"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Mixture { atoms, weights })
    }

    pub fn point_mass(atoms: AtomSet, k: usize) -> Result<Self> {
        if k >= atoms.len() {
            return invalid(format!("atom {k} out of range"));
        }
        let mut weights = vec![0.0; atoms.len()];
        weights[k] = 1.0;
        Mixture::new(atoms, weights, 0.0)
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `λ·self + (1−λ)·other` over the same atoms.
    pub fn convex(&self, lambda: f64, other: &Mixture) -> Result<Mixture> {
        if self.atoms != other.atoms {
            return invalid("mixtures live on different atom sets");
        }
        if !(0.0..=1.0).contains(&lambda) {
            return invalid("mixing parameter must lie in [0, 1]");
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Mixture::new(self.atoms.clone(), weights, DEFAULT_TOL)
    }

    /// `Σ_k w_k σ_k^{⊗n}` as a representation matrix.
    pub fn level_rep(&self, n: usize) -> CMat {
        let dim = self.atoms.base.rep_dim().pow(n as u32);
        let mut out = CMat::zeros(dim, dim);
        for (a, &w) in self.atoms.atoms.iter().zip(&self.weights) {
            if w != 0.0 {
                out += linalg::kron_power(&a.to_rep(), n) * c(w, 0.0);
            }
        }
        out
    }

    /// The level-1 average state.
    pub fn barycenter(&self) -> Result<StateVec> {
        StateVec::from_rep(&self.atoms.base, &self.level_rep(1), &Tolerances::default())
    }
}

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    #[serde(with = "json::matrices")]
    atoms: Vec<CMat>,
    weights: Vec<f64>,
}

impl Serialize for Mixture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureJson {
            atoms: self.atoms.atoms.iter().map(StateVec::to_rep).collect(),
            weights: self.weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mixture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MixtureJson::deserialize(d)?;
        let atoms = atoms_from_matrices(&j.atoms).map_err(serde::de::Error::custom)?;
        Mixture::new(atoms, j.weights, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// Explicit atoms on `B(C^d)` from density matrices.
pub fn atoms_from_matrices(ms: &[CMat]) -> Result<AtomSet> {
    let atoms = ms
        .iter()
        .map(|m| StateVec::from_density(m.clone()))
        .collect::<Result<Vec<_>>>()?;
    AtomSet::explicit(atoms)
}

/// `(Σ_k w_k σ_k^{⊗n})_{n ≤ N}`.
pub fn synthesize(mix: &Mixture, depth: usize) -> Result<ExchSeq> {
    if depth < 1 {
        return invalid("depth must be at least 1");
    }
    let reps: Vec<CMat> = (1..=depth).map(|n| mix.level_rep(n)).collect();
    ExchSeq::from_reps(mix.atoms.base.clone(), &reps, DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    pub solver: SimplexOptions,
    /// Largest acceptable residual when a representation is required.
    pub max_residual: f64,
    /// Trace-norm tolerance for the factorization check of [`mediating_map`].
    pub factor_tol: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            solver: SimplexOptions::default(),
            max_residual: 1e-6,
            factor_tol: 1e-7,
        }
    }
}

impl ReconstructOptions {
    /// Break ties between equally good mixtures toward the minimum-norm weight vector.
    pub fn min_norm(mut self, ridge: f64) -> Self {
        self.solver.nnls.ridge = ridge;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub mixture: Mixture,
    /// `sqrt(Σ_n ‖ρ_n − Σ_k w_k σ_k^{⊗n}‖_F²)`.
    pub residual: f64,
    /// Weight sum returned by the solver before renormalization.
    pub raw_weight_sum: f64,
    pub iterations: usize,
}

fn check_atoms_base(seq_base: &Algebra, atoms: &AtomSet) -> Result<()> {
    if seq_base != &atoms.base {
        return Err(Error::AlgebraMismatch {
            expected: seq_base.blocks().to_vec(),
            found: atoms.base.blocks().to_vec(),
        });
    }
    if atoms.is_empty() {
        return invalid("empty atom set");
    }
    Ok(())
}

fn fit_levels(
    reps: &[CMat],
    atoms: &AtomSet,
    design: &DMatrix<f64>,
    opts: &ReconstructOptions,
    start: Option<&[f64]>,
) -> Result<SimplexFit> {
    let target = stacked_coordinates(reps, atoms.base.is_commutative());
    nnls::simplex_lsq(design, &target, &opts.solver, start)
}

/// Best simplex-weighted iid representation of an exchangeable sequence.
pub fn reconstruct(
    seq: &ExchSeq,
    atoms: &AtomSet,
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    check_atoms_base(seq.base(), atoms)?;
    let report = check_exchangeable(seq);
    if !report.verdict {
        return Err(Error::NotExchangeable(Box::new(report)));
    }
    let design = atoms.moment_matrix(seq.depth());
    let fit = fit_levels(&seq.reps(), atoms, &design, opts, None)?;
    Ok(Reconstruction {
        mixture: Mixture::new(atoms.clone(), fit.weights, DEFAULT_TOL)?,
        residual: fit.residual,
        raw_weight_sum: fit.raw_sum,
        iterations: fit.iterations,
    })
}

/// Probe states for an apex algebra: `(1 + H)/(D + Tr H)` for the Hermitian
/// matrix-unit basis `E_jj`, `(E_jk + E_kj)/√2`, `i(E_jk − E_kj)/√2` inside each block.
pub fn probe_states(apex: &Algebra) -> Vec<CMat> {
    let dim = apex.rep_dim();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    for (&d, o) in apex.blocks().iter().zip(apex.offsets()) {
        for j in 0..d {
            basis.push(linalg::matrix_unit(dim, o + j, o + j));
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let (a, b) = (o + j, o + k);
                let mut sym = CMat::zeros(dim, dim);
                sym[(a, b)] = c(r2, 0.0);
                sym[(b, a)] = c(r2, 0.0);
                basis.push(sym);
                let mut anti = CMat::zeros(dim, dim);
                anti[(a, b)] = c(0.0, -r2);
                anti[(b, a)] = c(0.0, r2);
                basis.push(anti);
            }
        }
    }
    basis
        .into_iter()
        .map(|h| {
            let tr = linalg::trace(&h).re;
            (linalg::identity(dim) + h).unscale(dim as f64 + tr)
        })
        .collect()
}

/// A parameterized exchangeable sequence: Schrödinger channels `Φ_n : K → A^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    apex: Algebra,
    base: Algebra,
    channels: Vec<ChoiMap>,
    tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeLawReport {
    pub injections_checked: usize,
    pub probes: usize,
    pub max_violation: f64,
    pub exhaustive: bool,
}

impl Cone {
    pub fn new(apex: Algebra, base: Algebra, channels: Vec<ChoiMap>, tol: f64) -> Result<Self> {
        if channels.is_empty() {
            return invalid("a cone needs at least one level");
        }
        if tol.is_nan() || tol <= 0.0 {
            return invalid("tolerance must be positive");
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.direction() != Direction::Schrodinger {
                return Err(Error::Direction(format!(
                    "cone channel {} must be a Schrödinger map",
                    i + 1
                )));
            }
            if ch.source() != &apex {
                return invalid(format!("cone channel {} does not start at the apex", i + 1));
            }
            let level = TensorPower::new(&base, i + 1)?.algebra();
            if ch.target() != &level {
                return invalid(format!(
                    "cone channel {} does not land on level {}",
                    i + 1,
                    i + 1
                ));
            }
        }
        Ok(Cone {
            apex,
            base,
            channels,
            tol,
        })
    }

    /// Build each `Φ_n` from its action `f(n, κ)` on apex representation matrices.
    pub fn from_fn<F>(apex: Algebra, base: Algebra, depth: usize, tol: f64, f: F) -> Result<Self>
    where
        F: Fn(usize, &CMat) -> CMat,
    {
        let channels = (1..=depth)
            .map(|n| {
                let target = TensorPower::new(&base, n)?.algebra();
                ChoiMap::from_linear(apex.clone(), target, Direction::Schrodinger, |k| f(n, k))
            })
            .collect::<Result<Vec<_>>>()?;
        Cone::new(apex, base, channels, tol)
    }

    /// `Φ_n(κ) = Σ_k Tr(E_k κ) σ_k^{⊗n}` for effects `E_k` on the apex.
    pub fn measure_prepare(
        apex: Algebra,
        effects: &[CMat],
        atoms: &AtomSet,
        depth: usize,
        tol: f64,
    ) -> Result<Self> {
        if effects.len() != atoms.len() {
            return invalid(format!(
                "{} effects for {} atoms",
                effects.len(),
                atoms.len()
            ));
        }
        let reps: Vec<CMat> = atoms.atoms.iter().map(StateVec::to_rep).collect();
        Cone::from_fn(apex, atoms.base.clone(), depth, tol, |n, kappa| {
            let dim = reps[0].nrows().pow(n as u32);
            let mut out = CMat::zeros(dim, dim);
            for (e, s) in effects.iter().zip(&reps) {
                let p = (e * kappa).trace();
                if p != linalg::ZERO {
                    out += linalg::kron_power(s, n) * p;
                }
            }
            out
        })
    }

    /// `Φ_n(κ) = Tr(κ)·σ^{⊗n}`.
    pub fn constant(apex: Algebra, sigma: &StateVec, depth: usize, tol: f64) -> Result<Self> {
        let rep = sigma.to_rep();
        Cone::from_fn(apex, sigma.algebra().clone(), depth, tol, |n, kappa| {
            linalg::kron_power(&rep, n) * linalg::trace(kappa)
        })
    }

    /// A single exchangeable sequence as a cone with apex `C`.
    pub fn from_sequence(seq: &ExchSeq) -> Result<Self> {
        let reps = seq.reps();
        Cone::from_fn(
            Algebra::scalars(),
            seq.base().clone(),
            seq.depth(),
            seq.tolerance(),
            |n, kappa| &reps[n - 1] * kappa[(0, 0)],
        )
    }

    pub fn apex(&self) -> &Algebra {
        &self.apex
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ChoiMap] {
        &self.channels
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `Φ_n(κ)` for every probe state, indexed `[probe][n-1]`.
    pub fn probe_outputs(&self) -> Vec<Vec<CMat>> {
        probe_states(&self.apex)
            .iter()
            .map(|k| self.channels.iter().map(|ch| ch.apply_rep(k)).collect())
            .collect()
    }

    /// Compatibility with every injection `τ: n ↪ m` (generators only beyond the
    /// exhaustive range): `marginal_τ(Φ_m(κ)) = Φ_n(κ)` on every probe state.
    pub fn check_laws(&self) -> Result<ConeLawReport> {
        let outputs = self.probe_outputs();
        let factor = self.base.rep_dim();
        let depth = self.depth();
        let exhaustive = depth <= EXHAUSTIVE_SYMMETRY_MAX_LEVEL;
        let mut injections: Vec<(usize, Vec<usize>)> = Vec::new();
        for m in 1..=depth {
            if exhaustive {
                for n in 1..=m {
                    injections.extend(perm::all_injections(n, m).into_iter().map(|t| (m, t)));
                }
            } else {
                injections.extend(perm::adjacent_transpositions(m).into_iter().map(|t| (m, t)));
                if m > 1 {
                    injections.push((m, perm::identity(m - 1)));
                }
            }
        }
        let mut worst: Option<(f64, usize, usize, Vec<usize>)> = None;
        for (p, levels) in outputs.iter().enumerate() {
            for (m, tau) in &injections {
                let n = tau.len();
                let marg = exchange::marginal_rep(&levels[m - 1], factor, *m, tau);
                let v = linalg::trace_norm(&(marg - &levels[n - 1]));
                if worst.as_ref().is_none_or(|w| v > w.0) {
                    worst = Some((v, p, *m, tau.clone()));
                }
            }
        }
        let (max_violation, probe, m, tau) = worst.unwrap_or((0.0, 0, 0, Vec::new()));
        if max_violation > self.tol {
            return Err(Error::ConeLaw {
                n: tau.len(),
                tau,
                m,
                probe,
                violation: max_violation,
            });
        }
        Ok(ConeLawReport {
            injections_checked: injections.len(),
            probes: outputs.len(),
            max_violation,
            exhaustive,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ConeJson {
    apex: Algebra,
    base_dim: usize,
    depth: usize,
    channels: Vec<ChoiMap>,
    tol: f64,
}

impl Serialize for Cone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConeJson {
            apex: self.apex.clone(),
            base_dim: self.base.rep_dim(),
            depth: self.depth(),
            channels: self.channels.clone(),
            tol: self.tol,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cone {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ConeJson::deserialize(d)?;
        if j.depth != j.channels.len() {
            return Err(serde::de::Error::custom(format!(
                "depth {} does not match {} channels",
                j.depth,
                j.channels.len()
            )));
        }
        let base = Algebra::matrix(j.base_dim).map_err(serde::de::Error::custom)?;
        Cone::new(j.apex, base, j.channels, j.tol).map_err(serde::de::Error::custom)
    }
}

/// The measure-valued channel `κ ↦ ν_κ` through which a cone factors.
#[derive(Debug, Clone)]
pub struct MediatingMap {
    apex: Algebra,
    atoms: AtomSet,
    depth: usize,
    probes: Vec<CMat>,
    weights: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    decoder: DMatrix<f64>,
}

fn probe_decoder(probes: &[CMat]) -> Result<DMatrix<f64>> {
    let cols: Vec<Vec<f64>> = probes.iter().map(linalg::hermitian_coordinates).collect();
    let rows = cols[0].len();
    let m = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    m.pseudo_inverse(1e-12)
        .map_err(|e| Error::Solver(e.to_string()))
}

impl MediatingMap {
    fn assemble(
        apex: Algebra,
        atoms: AtomSet,
        depth: usize,
        probes: Vec<CMat>,
        weights: Vec<Vec<f64>>,
        residuals: Vec<f64>,
    ) -> Result<Self> {
        if probes.is_empty() || probes.len() != weights.len() || residuals.len() != weights.len() {
            return invalid("probe, weight and residual lists disagree");
        }
        if weights.iter().any(|w| w.len() != atoms.len()) {
            return invalid("weight rows must have one entry per atom");
        }
        let decoder = probe_decoder(&probes)?;
        Ok(MediatingMap {
            apex,
            atoms,
            depth,
            probes,
            weights,
            residuals,
            decoder,
        })
    }

    pub fn apex(&self) -> &Algebra {
        &self.apex
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.atoms
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn probes(&self) -> &[CMat] {
        &self.probes
    }

    /// Weight rows, one per probe state.
    pub fn probe_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Replace the weights of one probe (renormalized), e.g. to study perturbations.
    pub fn with_probe_weights(mut self, probe: usize, weights: Vec<f64>) -> Result<Self> {
        if probe >= self.weights.len() || weights.len() != self.atoms.len() {
            return invalid("probe index or weight length out of range");
        }
        let total: f64 = weights.iter().sum();
        self.weights[probe] = weights.into_iter().map(|w| w / total).collect();
        Ok(self)
    }

    /// `ν_κ`, extended linearly from the probe states.
    pub fn apply(&self, kappa: &StateVec) -> Result<Mixture> {
        if kappa.algebra() != &self.apex {
            return Err(Error::AlgebraMismatch {
                expected: self.apex.blocks().to_vec(),
                found: kappa.algebra().blocks().to_vec(),
            });
        }
        let coords = DVector::from_vec(linalg::hermitian_coordinates(&kappa.to_rep()));
        let coeffs = &self.decoder * coords;
        let mut weights = vec![0.0; self.atoms.len()];
        for (ck, row) in coeffs.iter().zip(&self.weights) {
            for (w, r) in weights.iter_mut().zip(row) {
                *w += ck * r;
            }
        }
        Mixture::new(self.atoms.clone(), weights, 1e-7)
    }
}

#[derive(Serialize, Deserialize)]
struct MediatingJson {
    apex: Algebra,
    base_dim: usize,
    depth: usize,
    basis: String,
    #[serde(with = "json::matrices")]
    probes: Vec<CMat>,
    #[serde(with = "json::matrices")]
    atoms: Vec<CMat>,
    weights: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

const PROBE_BASIS: &str = "hermitian matrix units mixed with the identity: (1 + H)/(D + Tr H)";

impl Serialize for MediatingMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MediatingJson {
            apex: self.apex.clone(),
            base_dim: self.atoms.base.rep_dim(),
            depth: self.depth,
            basis: PROBE_BASIS.to_string(),
            probes: self.probes.clone(),
            atoms: self.atoms.atoms.iter().map(StateVec::to_rep).collect(),
            weights: self.weights.clone(),
            residuals: self.residuals.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MediatingMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MediatingJson::deserialize(d)?;
        let atoms = atoms_from_matrices(&j.atoms).map_err(serde::de::Error::custom)?;
        MediatingMap::assemble(j.apex, atoms, j.depth, j.probes, j.weights, j.residuals)
            .map_err(serde::de::Error::custom)
    }
}

/// Factor a cone through mixtures over `atoms`.
///
/// Fails with [`Error::ConeLaw`] if the cone is not compatible with the injections,
/// and with [`Error::NotRepresentable`] if some probe sequence has residual above
/// `opts.max_residual` or the assembled map misses the cone by more than `opts.factor_tol`.
pub fn mediating_map(
    cone: &Cone,
    atoms: &AtomSet,
    opts: &ReconstructOptions,
) -> Result<MediatingMap> {
    cone.check_laws()?;
    check_atoms_base(&cone.base, atoms)?;
    let design = atoms.moment_matrix(cone.depth());
    let probes = probe_states(&cone.apex);
    let outputs = cone.probe_outputs();
    let fits = outputs
        .par_iter()
        .map(|levels| fit_levels(levels, atoms, &design, opts, None))
        .collect::<Result<Vec<_>>>()?;
    if let Some(worst) = fits.iter().map(|f| f.residual).reduce(f64::max) {
        if worst > opts.max_residual {
            return Err(Error::NotRepresentable {
                residual: worst,
                threshold: opts.max_residual,
            });
        }
    }
    let (weights, residuals) = fits.into_iter().map(|f| (f.weights, f.residual)).unzip();
    let med = MediatingMap::assemble(
        cone.apex.clone(),
        atoms.clone(),
        cone.depth(),
        probes,
        weights,
        residuals,
    )?;
    let err = factorization_error(cone, &med)?;
    if err > opts.factor_tol {
        return Err(Error::NotRepresentable {
            residual: err,
            threshold: opts.factor_tol,
        });
    }
    Ok(med)
}

/// `max_{κ, n} ‖Φ_n(κ) − Σ_k (ν_κ)_k σ_k^{⊗n}‖_1` over the probe states.
pub fn factorization_error(cone: &Cone, med: &MediatingMap) -> Result<f64> {
    if cone.apex != med.apex || cone.base != med.atoms.base {
        return invalid("cone and mediating map have different apex or base");
    }
    if cone.depth() > med.depth {
        return invalid("mediating map was built for a shallower cone");
    }
    let atom_reps: Vec<CMat> = med.atoms.atoms.iter().map(StateVec::to_rep).collect();
    let mut worst = 0.0f64;
    for (kappa, weights) in med.probes.iter().zip(&med.weights) {
        let mut powers: Vec<CMat> = vec![linalg::identity(1); atom_reps.len()];
        for ch in &cone.channels {
            let target = ch.apply_rep(kappa);
            let mut synth = CMat::zeros(target.nrows(), target.ncols());
            for ((p, s), &w) in powers.iter_mut().zip(&atom_reps).zip(weights) {
                *p = linalg::kron(p, s);
                if w != 0.0 {
                    synth += &*p * c(w, 0.0);
                }
            }
            worst = worst.max(linalg::trace_norm(&(target - synth)));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub trials: usize,
    pub probes: usize,
    pub atom_count: usize,
    pub moment_rank: usize,
    /// Moment vectors are linearly dependent at this depth.
    pub degenerate: bool,
    pub determined_atoms: Vec<usize>,
    /// Max-norm spread of the weights on determined atoms across restarts.
    pub max_pairwise_distance: f64,
    pub unique: bool,
}

/// Re-solve every probe reconstruction from `trials` random feasible starts and
/// measure how far the answers drift apart on atoms the moments determine.
pub fn uniqueness_check(
    cone: &Cone,
    atoms: &AtomSet,
    trials: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    check_atoms_base(&cone.base, atoms)?;
    let opts = ReconstructOptions::default();
    let analysis = moment_analysis(atoms, cone.depth());
    let determined: Vec<usize> = (0..atoms.len())
        .filter(|&k| analysis.determined[k])
        .collect();
    let design = atoms.moment_matrix(cone.depth());
    let outputs = cone.probe_outputs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            let raw: Vec<f64> = (0..atoms.len())
                .map(|_| rng.sample::<f64, _>(Exp1))
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let mut max_pairwise_distance = 0.0f64;
    for levels in &outputs {
        let solutions = starts
            .par_iter()
            .map(|s| fit_levels(levels, atoms, &design, &opts, Some(s)).map(|f| f.weights))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..solutions.len() {
            for j in (i + 1)..solutions.len() {
                let d = determined
                    .iter()
                    .map(|&k| (solutions[i][k] - solutions[j][k]).abs())
                    .fold(0.0, f64::max);
                max_pairwise_distance = max_pairwise_distance.max(d);
            }
        }
    }
    let degenerate = !analysis.independent();
    Ok(UniquenessReport {
        trials,
        probes: outputs.len(),
        atom_count: atoms.len(),
        moment_rank: analysis.rank,
        degenerate,
        determined_atoms: determined,
        max_pairwise_distance,
        unique: !degenerate && max_pairwise_distance <= UNIQUENESS_TOL,
    })
}
