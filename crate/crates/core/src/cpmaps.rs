//! Linear maps between finite C*-algebras, stored as Choi matrices.
//!
//! A [`ChoiMap`] with source `A` (representation size `p`) and target `B`
//! (representation size `q`) is the linear map `Φ: M_p → M_q` whose Choi matrix is
//! `C = Σ_ij E_ij ⊗ Φ(E_ij)`, so `C[(i,k),(j,l)] = Φ(E_ij)[k,l]` with row index
//! `i·q + k`. The map is compressed to the block structure on both sides:
//! entries coupling different source blocks or different target blocks are dropped
//! on construction.
//!
//! The direction flag fixes what the map acts on. A Heisenberg map sends elements
//! of `source` to elements of `target` and is expected to be unital; a Schrödinger
//! map sends states of `source` to states of `target`. [`ChoiMap::dualize`]
//! converts between the two via `Tr(Φ*(ρ) a) = Tr(ρ Φ(a))`.
//!
//! JSON: `{"source": [2], "target": [2], "direction": "H", "choi": [[[re, im], ...], ...]}`.

use serde::{Deserialize, Serialize};

use crate::cstar::{Algebra, Element, StateVec, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::json;
use crate::linalg::{self, c, CMat, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "H")]
    Heisenberg,
    #[serde(rename = "S")]
    Schrodinger,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Heisenberg => Direction::Schrodinger,
            Direction::Schrodinger => Direction::Heisenberg,
        }
    }
}

/// Entrywise max-norm tolerance for comparing maps.
pub const MAP_EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiJson", into = "ChoiJson")]
pub struct ChoiMap {
    source: Algebra,
    target: Algebra,
    direction: Direction,
    choi: CMat,
}

#[derive(Serialize, Deserialize)]
struct ChoiJson {
    source: Algebra,
    target: Algebra,
    direction: Direction,
    #[serde(with = "json::matrix")]
    choi: CMat,
}

impl TryFrom<ChoiJson> for ChoiMap {
    type Error = Error;

    fn try_from(j: ChoiJson) -> Result<Self> {
        ChoiMap::new(j.source, j.target, j.direction, j.choi)
    }
}

impl From<ChoiMap> for ChoiJson {
    fn from(m: ChoiMap) -> Self {
        ChoiJson {
            source: m.source,
            target: m.target,
            direction: m.direction,
            choi: m.choi,
        }
    }
}

fn block_labels(a: &Algebra) -> Vec<usize> {
    a.blocks()
        .iter()
        .enumerate()
        .flat_map(|(b, &d)| std::iter::repeat_n(b, d))
        .collect()
}

impl ChoiMap {
    pub fn new(
        source: Algebra,
        target: Algebra,
        direction: Direction,
        mut choi: CMat,
    ) -> Result<Self> {
        let (p, q) = (source.rep_dim(), target.rep_dim());
        if choi.nrows() != p * q || choi.ncols() != p * q {
            return invalid(format!(
                "Choi matrix must be {}x{}, got {}x{}",
                p * q,
                p * q,
                choi.nrows(),
                choi.ncols()
            ));
        }
        let (sb, tb) = (block_labels(&source), block_labels(&target));
        for r in 0..p * q {
            for s in 0..p * q {
                let (i, k) = (r / q, r % q);
                let (j, l) = (s / q, s % q);
                if sb[i] != sb[j] || tb[k] != tb[l] {
                    choi[(r, s)] = ZERO;
                }
            }
        }
        Ok(ChoiMap {
            source,
            target,
            direction,
            choi,
        })
    }

    /// Build the Choi matrix of a linear map given on representation matrices.
    pub fn from_linear<F>(
        source: Algebra,
        target: Algebra,
        direction: Direction,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&CMat) -> CMat,
    {
        let (p, q) = (source.rep_dim(), target.rep_dim());
        let mut choi = CMat::zeros(p * q, p * q);
        for i in 0..p {
            for j in 0..p {
                let out = f(&linalg::matrix_unit(p, i, j));
                if out.nrows() != q || out.ncols() != q {
                    return invalid("linear map produced an output of the wrong size");
                }
                choi.view_mut((i * q, j * q), (q, q)).copy_from(&out);
            }
        }
        ChoiMap::new(source, target, direction, choi)
    }

    pub fn identity(algebra: &Algebra, direction: Direction) -> Self {
        Self::from_linear(algebra.clone(), algebra.clone(), direction, CMat::clone)
            .expect("identity is well-formed")
    }

    /// `ρ ↦ Tr(ρ)·I/d` on `B(C^d)`, as a Schrödinger map.
    pub fn depolarizing(d: usize) -> Result<Self> {
        let a = Algebra::matrix(d)?;
        Self::from_linear(a.clone(), a, Direction::Schrodinger, |x| {
            linalg::identity(d) * (linalg::trace(x) / d as f64)
        })
    }

    /// `a ↦ Tr(a)·I/d` on `B(C^d)`, as a Heisenberg map.
    pub fn trace_average(d: usize) -> Result<Self> {
        Ok(Self::depolarizing(d)?.with_direction(Direction::Heisenberg))
    }

    /// Standard-basis measurement `ρ ↦ Σ_k <k|ρ|k> |k><k|` on `B(C^d)`.
    pub fn measure_standard_basis(d: usize) -> Result<Self> {
        let a = Algebra::matrix(d)?;
        Self::from_linear(a.clone(), a, Direction::Schrodinger, |x| {
            CMat::from_fn(d, d, |i, j| if i == j { x[(i, i)] } else { ZERO })
        })
    }

    /// Standard-basis measurement with outcomes in the classical algebra on `d` points.
    pub fn measure_to_classical(d: usize) -> Result<Self> {
        Self::from_linear(
            Algebra::matrix(d)?,
            Algebra::classical(d)?,
            Direction::Schrodinger,
            |x| CMat::from_fn(d, d, |i, j| if i == j { x[(i, i)] } else { ZERO }),
        )
    }

    pub fn transpose(d: usize, direction: Direction) -> Result<Self> {
        let a = Algebra::matrix(d)?;
        Self::from_linear(a.clone(), a, direction, |x| x.transpose())
    }

    /// `x ↦ k·x`.
    pub fn scaled_identity(algebra: &Algebra, k: f64, direction: Direction) -> Self {
        Self::from_linear(algebra.clone(), algebra.clone(), direction, |x| {
            x * c(k, 0.0)
        })
        .expect("scaled identity is well-formed")
    }

    /// Same Choi matrix, reinterpreted with another direction flag.
    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// Raw action on representation matrices: `Φ(X)[k,l] = Σ_ij X[i,j] C[(i,k),(j,l)]`.
    pub fn apply_rep(&self, x: &CMat) -> CMat {
        let (p, q) = (self.source.rep_dim(), self.target.rep_dim());
        let mut out = CMat::zeros(q, q);
        for i in 0..p {
            for j in 0..p {
                let xij = x[(i, j)];
                if xij == ZERO {
                    continue;
                }
                out += self.choi.view((i * q, j * q), (q, q)) * xij;
            }
        }
        out
    }

    /// `(Φ ⊗ id_n)(X)` for `X` on `C^p ⊗ C^n`.
    pub fn apply_ampliated(&self, x: &CMat, n: usize) -> CMat {
        let (p, q) = (self.source.rep_dim(), self.target.rep_dim());
        let mut out = CMat::zeros(q * n, q * n);
        for i in 0..p {
            for j in 0..p {
                let phi = self.choi.view((i * q, j * q), (q, q));
                for a in 0..n {
                    for b in 0..n {
                        let xv = x[(i * n + a, j * n + b)];
                        if xv == ZERO {
                            continue;
                        }
                        for k in 0..q {
                            for l in 0..q {
                                out[(k * n + a, l * n + b)] += phi[(k, l)] * xv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Heisenberg action on an element of the source algebra.
    pub fn apply_element(&self, a: &Element) -> Result<Element> {
        if self.direction != Direction::Heisenberg {
            return Err(Error::Direction(
                "elements are mapped by Heisenberg maps".into(),
            ));
        }
        self.check_source(a.algebra())?;
        Element::from_rep(&self.target, &self.apply_rep(&a.to_rep()))
    }

    /// Schrödinger action on a state of the source algebra; the output is validated as a state.
    pub fn apply_state(&self, s: &StateVec, tol: &Tolerances) -> Result<StateVec> {
        if self.direction != Direction::Schrodinger {
            return Err(Error::Direction(
                "states are mapped by Schrödinger maps".into(),
            ));
        }
        self.check_source(s.algebra())?;
        StateVec::from_rep(&self.target, &self.apply_rep(&s.to_rep()), tol)
    }

    fn check_source(&self, a: &Algebra) -> Result<()> {
        if a != &self.source {
            return Err(Error::AlgebraMismatch {
                expected: self.source.blocks().to_vec(),
                found: a.blocks().to_vec(),
            });
        }
        Ok(())
    }

    /// Choi positivity, equivalent to complete positivity in finite dimension.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        linalg::hermitian_deviation(&self.choi) <= tol && linalg::min_eigenvalue(&self.choi) >= -tol
    }

    /// `Φ(1) = 1` within `tol` (entrywise). Heisenberg maps only.
    pub fn is_unital(&self, tol: f64) -> Result<bool> {
        if self.direction != Direction::Heisenberg {
            return Err(Error::Direction(
                "unitality is a Heisenberg-picture property".into(),
            ));
        }
        let image = self.apply_rep(&self.source.unit().to_rep());
        let unit = self.target.unit().to_rep();
        Ok(linalg::max_abs(&(image - unit)) <= tol)
    }

    /// `Tr Φ(X) = Tr X` for all `X` within `tol`. Schrödinger maps only.
    pub fn is_trace_preserving(&self, tol: f64) -> Result<bool> {
        if self.direction != Direction::Schrodinger {
            return Err(Error::Direction(
                "trace preservation is a Schrödinger-picture property".into(),
            ));
        }
        self.clone().dualize().is_unital(tol)
    }

    /// `self` followed by `next`.
    pub fn compose(&self, next: &ChoiMap) -> Result<ChoiMap> {
        if self.direction != next.direction {
            return Err(Error::Direction(
                "cannot compose maps of different directions".into(),
            ));
        }
        if self.target != next.source {
            return Err(Error::AlgebraMismatch {
                expected: self.target.blocks().to_vec(),
                found: next.source.blocks().to_vec(),
            });
        }
        Self::from_linear(
            self.source.clone(),
            next.target.clone(),
            self.direction,
            |x| next.apply_rep(&self.apply_rep(x)),
        )
    }

    /// `Φ ⊗ Ψ` on the tensor-product algebras.
    pub fn tensor(&self, other: &ChoiMap) -> Result<ChoiMap> {
        if self.direction != other.direction {
            return Err(Error::Direction(
                "cannot tensor maps of different directions".into(),
            ));
        }
        let (p, q) = (self.source.rep_dim(), self.target.rep_dim());
        let (pp, qq) = (other.source.rep_dim(), other.target.rep_dim());
        let gs = self.source.tensor_grouping(&other.source);
        let gt = self.target.tensor_grouping(&other.target);
        let qt = q * qq;
        let mut choi = CMat::zeros(p * pp * qt, p * pp * qt);
        for a in 0..p {
            for ap in 0..p {
                for g in 0..q {
                    for gp in 0..q {
                        let cf = self.choi[(a * q + g, ap * q + gp)];
                        if cf == ZERO {
                            continue;
                        }
                        for b in 0..pp {
                            for bp in 0..pp {
                                for d in 0..qq {
                                    for dp in 0..qq {
                                        let cg = other.choi[(b * qq + d, bp * qq + dp)];
                                        let row = gs[a * pp + b] * qt + gt[g * qq + d];
                                        let col = gs[ap * pp + bp] * qt + gt[gp * qq + dp];
                                        choi[(row, col)] = cf * cg;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        ChoiMap::new(
            self.source.tensor(&other.source),
            self.target.tensor(&other.target),
            self.direction,
            choi,
        )
    }

    /// The adjoint for the trace pairing, with source/target and direction swapped.
    pub fn dualize(self) -> ChoiMap {
        let (p, q) = (self.source.rep_dim(), self.target.rep_dim());
        let choi = CMat::from_fn(p * q, p * q, |r, s| {
            // D[(l,j),(k,i)] = C[(i,k),(j,l)]
            let (l, j) = (r / p, r % p);
            let (k, i) = (s / p, s % p);
            self.choi[(i * q + k, j * q + l)]
        });
        ChoiMap {
            source: self.target,
            target: self.source,
            direction: self.direction.flip(),
            choi,
        }
    }

    /// Entrywise max-norm distance between Choi matrices.
    pub fn max_distance(&self, other: &ChoiMap) -> Result<f64> {
        if self.source != other.source || self.target != other.target {
            return invalid("maps have different source or target");
        }
        Ok(linalg::max_abs(&(&self.choi - &other.choi)))
    }

    pub fn approx_eq(&self, other: &ChoiMap, tol: f64) -> bool {
        self.direction == other.direction && self.max_distance(other).is_ok_and(|d| d <= tol)
    }
}
