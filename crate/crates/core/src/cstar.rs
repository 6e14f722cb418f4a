//! Finite-dimensional C*-algebras.
//!
//! Every finite-dimensional C*-algebra is a direct sum of full matrix blocks
//! `M_{d_1} ⊕ ... ⊕ M_{d_k}`. An [`Algebra`] records the block sizes; the
//! algebra is commutative (functions on a `k`-point set) exactly when every
//! block is 1×1.
//!
//! Elements and states are stored blockwise. A state is represented by its
//! density matrices: the functional `a ↦ Σ_i Tr(dens_i · a_i)`.
//!
//! JSON forms:
//!
//! ```json
//! {"blocks": [2], "mats": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}
//! {"blocks": [2], "dens": [[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]]}
//! ```

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::json;
use crate::linalg::{self, CMat, ZERO};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Positivity and normalization tolerances used when validating states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub psd: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: DEFAULT_TOL,
            trace: DEFAULT_TOL,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            psd: tol,
            trace: tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Algebra {
    blocks: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Algebra {
    type Error = Error;

    fn try_from(blocks: Vec<usize>) -> Result<Self> {
        Algebra::new(blocks)
    }
}

impl From<Algebra> for Vec<usize> {
    fn from(a: Algebra) -> Self {
        a.blocks
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|d| format!("M{d}")).collect();
        f.write_str(&parts.join(" ⊕ "))
    }
}

impl Algebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("an algebra needs at least one block");
        }
        if blocks.contains(&0) {
            return invalid(format!("block sizes must be positive, got {blocks:?}"));
        }
        Ok(Algebra { blocks })
    }

    /// The full matrix algebra `B(C^d)`.
    pub fn matrix(d: usize) -> Result<Self> {
        Algebra::new(vec![d])
    }

    /// Functions on a `k`-point set.
    pub fn classical(k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("a classical algebra needs at least one point");
        }
        Algebra::new(vec![1; k])
    }

    /// The scalars `C`.
    pub fn scalars() -> Self {
        Algebra { blocks: vec![1] }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Vector-space dimension `Σ d_i²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|d| d * d).sum()
    }

    /// Size of the block-diagonal representation, `Σ d_i`.
    pub fn rep_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&d| d == 1)
    }

    /// `Some(d)` when the algebra is a single block `B(C^d)`.
    pub fn single_block(&self) -> Option<usize> {
        (self.blocks.len() == 1).then(|| self.blocks[0])
    }

    pub fn unit(&self) -> Element {
        Element {
            algebra: self.clone(),
            mats: self.blocks.iter().map(|&d| linalg::identity(d)).collect(),
        }
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.clone(),
            mats: self.blocks.iter().map(|&d| CMat::zeros(d, d)).collect(),
        }
    }

    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|&d| {
                let o = acc;
                acc += d;
                o
            })
            .collect()
    }

    /// Assemble block matrices into the block-diagonal representation.
    pub fn to_rep(&self, mats: &[CMat]) -> CMat {
        let n = self.rep_dim();
        let mut out = CMat::zeros(n, n);
        for (m, o) in mats.iter().zip(self.offsets()) {
            out.view_mut((o, o), (m.nrows(), m.ncols())).copy_from(m);
        }
        out
    }

    /// Cut a representation matrix down to its diagonal blocks.
    pub fn from_rep(&self, rep: &CMat) -> Vec<CMat> {
        self.blocks
            .iter()
            .zip(self.offsets())
            .map(|(&d, o)| rep.view((o, o), (d, d)).into_owned())
            .collect()
    }

    /// Tensor product. Blocks are the products `d_i e_j` in lexicographic order.
    pub fn tensor(&self, other: &Algebra) -> Algebra {
        let blocks = self
            .blocks
            .iter()
            .flat_map(|&d| other.blocks.iter().map(move |&e| d * e))
            .collect();
        Algebra { blocks }
    }

    /// Index map from the Kronecker product of the two representations to the
    /// grouped representation of [`Algebra::tensor`].
    pub fn tensor_grouping(&self, other: &Algebra) -> Vec<usize> {
        let q = other.rep_dim();
        let mut map = vec![0; self.rep_dim() * q];
        let mut next = 0;
        for (&d, oa) in self.blocks.iter().zip(self.offsets()) {
            for (&e, ob) in other.blocks.iter().zip(other.offsets()) {
                for a in 0..d {
                    for b in 0..e {
                        map[(oa + a) * q + ob + b] = next;
                        next += 1;
                    }
                }
            }
        }
        map
    }

    fn check_same(&self, other: &Algebra) -> Result<()> {
        if self != other {
            return Err(Error::AlgebraMismatch {
                expected: self.blocks.clone(),
                found: other.blocks.clone(),
            });
        }
        Ok(())
    }
}

fn check_shapes(algebra: &Algebra, mats: &[CMat]) -> Result<()> {
    if mats.len() != algebra.blocks.len() {
        return invalid(format!(
            "expected {} blocks, got {}",
            algebra.blocks.len(),
            mats.len()
        ));
    }
    for (i, (m, &d)) in mats.iter().zip(&algebra.blocks).enumerate() {
        if m.nrows() != d || m.ncols() != d {
            return invalid(format!(
                "block {i} has shape {}x{}, expected {d}x{d}",
                m.nrows(),
                m.ncols()
            ));
        }
    }
    Ok(())
}

/// An element of a finite-dimensional C*-algebra, one matrix per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementJson", into = "ElementJson")]
pub struct Element {
    algebra: Algebra,
    mats: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    blocks: Algebra,
    #[serde(with = "json::matrices")]
    mats: Vec<CMat>,
}

impl TryFrom<ElementJson> for Element {
    type Error = Error;

    fn try_from(j: ElementJson) -> Result<Self> {
        Element::new(j.blocks, j.mats)
    }
}

impl From<Element> for ElementJson {
    fn from(e: Element) -> Self {
        ElementJson {
            blocks: e.algebra,
            mats: e.mats,
        }
    }
}

impl Element {
    pub fn new(algebra: Algebra, mats: Vec<CMat>) -> Result<Self> {
        check_shapes(&algebra, &mats)?;
        Ok(Element { algebra, mats })
    }

    /// A square matrix viewed as an element of `B(C^n)`.
    pub fn from_matrix(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return invalid(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        let algebra = Algebra::matrix(m.nrows())?;
        Ok(Element {
            algebra,
            mats: vec![m],
        })
    }

    pub fn from_rep(algebra: &Algebra, rep: &CMat) -> Result<Self> {
        if rep.nrows() != algebra.rep_dim() || rep.ncols() != algebra.rep_dim() {
            return invalid("representation matrix has the wrong size");
        }
        Ok(Element {
            algebra: algebra.clone(),
            mats: algebra.from_rep(rep),
        })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    /// The block matrix of a single-block element.
    pub fn matrix(&self) -> &CMat {
        &self.mats[0]
    }

    pub fn to_rep(&self) -> CMat {
        self.algebra.to_rep(&self.mats)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.mats
            .iter()
            .map(linalg::hermitian_deviation)
            .fold(0.0, f64::max)
    }

    pub fn operator_norm(&self) -> f64 {
        self.mats
            .iter()
            .map(linalg::operator_norm)
            .fold(0.0, f64::max)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        is_positive_element(self, tol)
    }

    pub fn scale(&self, k: Complex64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            mats: self.mats.iter().map(|m| m * k).collect(),
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.algebra.check_same(&other.algebra)?;
        Ok(Element {
            algebra: self.algebra.clone(),
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.algebra.check_same(&other.algebra)?;
        Ok(Element {
            algebra: self.algebra.clone(),
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn adjoint(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            mats: self.mats.iter().map(|m| m.adjoint()).collect(),
        }
    }

    /// Entrywise max-norm distance.
    pub fn max_distance(&self, other: &Element) -> Result<f64> {
        self.algebra.check_same(&other.algebra)?;
        Ok(self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max))
    }
}

/// `x` is positive iff every block is Hermitian with spectrum in `[-tol, ∞)`.
///
/// Blocks are symmetrized before the eigensolve; a block whose Hermitian
/// deviation exceeds `tol` is rejected outright.
pub fn is_positive_element(a: &Element, tol: f64) -> bool {
    a.mats
        .iter()
        .all(|m| linalg::hermitian_deviation(m) <= tol && linalg::min_eigenvalue(m) >= -tol)
}

/// A state on an [`Algebra`], stored as density matrices per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct StateVec {
    algebra: Algebra,
    dens: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    blocks: Algebra,
    #[serde(with = "json::matrices")]
    dens: Vec<CMat>,
}

impl TryFrom<StateJson> for StateVec {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        StateVec::new(j.blocks, j.dens, &Tolerances::default())
    }
}

impl From<StateVec> for StateJson {
    fn from(s: StateVec) -> Self {
        StateJson {
            blocks: s.algebra,
            dens: s.dens,
        }
    }
}

impl StateVec {
    /// Validate and symmetrize density blocks into a state.
    pub fn new(algebra: Algebra, dens: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        check_shapes(&algebra, &dens)?;
        let mut total = 0.0;
        let mut sym = Vec::with_capacity(dens.len());
        for (i, m) in dens.iter().enumerate() {
            let dev = linalg::hermitian_deviation(m);
            if dev > tol.psd {
                return invalid(format!(
                    "density block {i} is not Hermitian (deviation {dev:.3e})"
                ));
            }
            let h = linalg::hermitian_part(m);
            let lo = linalg::min_eigenvalue(&h);
            if lo < -tol.psd {
                return invalid(format!(
                    "density block {i} has negative eigenvalue {lo:.3e}"
                ));
            }
            total += linalg::trace(&h).re;
            sym.push(h);
        }
        if (total - 1.0).abs() > tol.trace {
            return invalid(format!("density trace is {total}, expected 1"));
        }
        Ok(StateVec { algebra, dens: sym })
    }

    /// A density matrix on `B(C^n)`.
    pub fn from_density(m: CMat) -> Result<Self> {
        Self::from_density_with(m, &Tolerances::default())
    }

    pub fn from_density_with(m: CMat, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return invalid("density matrix must be square and nonempty");
        }
        let algebra = Algebra::matrix(m.nrows())?;
        StateVec::new(algebra, vec![m], tol)
    }

    pub fn from_rep(algebra: &Algebra, rep: &CMat, tol: &Tolerances) -> Result<Self> {
        if rep.nrows() != algebra.rep_dim() || rep.ncols() != algebra.rep_dim() {
            return invalid("representation matrix has the wrong size");
        }
        StateVec::new(algebra.clone(), algebra.from_rep(rep), tol)
    }

    /// The pure state `|ψ><ψ|/<ψ|ψ>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm <= 0.0 {
            return invalid("zero state vector");
        }
        StateVec::from_density(linalg::projector(psi).unscale(norm))
    }

    /// Computational basis state `|k><k|` in `B(C^d)`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return invalid(format!("basis index {k} out of range for dimension {d}"));
        }
        StateVec::from_density(linalg::matrix_unit(d, k, k))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        StateVec::from_density(linalg::identity(d).unscale(d as f64))
    }

    /// A probability vector as a state on the classical algebra with `probs.len()` points.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let algebra = Algebra::classical(probs.len())?;
        let dens = probs
            .iter()
            .map(|&p| CMat::from_element(1, 1, linalg::c(p, 0.0)))
            .collect();
        StateVec::new(algebra, dens, &Tolerances::default())
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn dens(&self) -> &[CMat] {
        &self.dens
    }

    /// The density matrix of a single-block state.
    pub fn density(&self) -> &CMat {
        &self.dens[0]
    }

    pub fn to_rep(&self) -> CMat {
        self.algebra.to_rep(&self.dens)
    }

    /// `Σ_i Tr(dens_i · a_i)`.
    pub fn eval(&self, a: &Element) -> Result<Complex64> {
        eval_state(self, a)
    }

    /// For a commutative algebra, the state as a probability vector.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        self.algebra
            .is_commutative()
            .then(|| self.dens.iter().map(|m| m[(0, 0)].re).collect())
    }

    /// Trace-norm distance `‖ρ - σ‖_1`.
    pub fn trace_distance(&self, other: &StateVec) -> Result<f64> {
        self.algebra.check_same(&other.algebra)?;
        Ok(self
            .dens
            .iter()
            .zip(&other.dens)
            .map(|(a, b)| linalg::trace_norm(&(a - b)))
            .sum())
    }
}

pub fn eval_state(s: &StateVec, a: &Element) -> Result<Complex64> {
    s.algebra.check_same(&a.algebra)?;
    Ok(s.dens
        .iter()
        .zip(&a.mats)
        .map(|(rho, x)| (rho * x).trace())
        .fold(ZERO, |acc, z| acc + z))
}
