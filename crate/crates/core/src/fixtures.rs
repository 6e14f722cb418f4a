//! Reference sequences, atom sets and cones for qubits and coins.
//!
//! These encode the output states of simple preparation circuits directly: a
//! classical coin copied into every qubit, the maximally mixed qubit, uniformly
//! random equator states, uniformly random states in the Bloch ball, and a
//! measure-and-copy channel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::classical::{ClassicalExchSeq, FinDist};
use crate::cstar::{Algebra, StateVec};
use crate::definetti::{synthesize, AtomSet, Cone, Mixture};
use crate::error::Result;
use crate::exchange::{iid_extend, ExchSeq};
use crate::linalg::{self, c, CMat, ONE, ZERO};

/// Number of phases in the discretized equator.
pub const EQUATOR_PHASES: usize = 64;
/// Grid points per axis of `(r, z, θ)` for the unknown-qubit belief.
pub const BLOCH_GRID_AXIS: usize = 8;
/// Coin biases `P(H)` of the bag-of-coins example.
pub const COIN_BIASES: [f64; 3] = [0.0, 0.5, 1.0];

/// `{|0⟩⟨0|, |1⟩⟨1|}`.
pub fn computational_atoms() -> AtomSet {
    AtomSet::explicit(vec![
        StateVec::basis(2, 0).expect("basis state"),
        StateVec::basis(2, 1).expect("basis state"),
    ])
    .expect("distinct atoms")
}

/// `{I/2}`.
pub fn maximally_mixed_atom() -> AtomSet {
    AtomSet::explicit(vec![StateVec::maximally_mixed(2).expect("qubit")]).expect("one atom")
}

/// `½|0…0⟩⟨0…0| + ½|1…1⟩⟨1…1|`: a fair coin copied into `n` qubits.
pub fn copied_coin(depth: usize) -> Result<ExchSeq> {
    synthesize(
        &Mixture::new(computational_atoms(), vec![0.5, 0.5], 0.0)?,
        depth,
    )
}

/// `(I/2)^{⊗n}`.
pub fn maximally_mixed(depth: usize) -> Result<ExchSeq> {
    iid_extend(&StateVec::maximally_mixed(2)?, depth)
}

/// `(I/2, |ψ⁻⟩⟨ψ⁻|)`: exchangeable at depth 2 but not a mixture of iid states.
pub fn singlet() -> Result<ExchSeq> {
    let r = FRAC_1_SQRT_2;
    let psi = [ZERO, c(r, 0.0), c(-r, 0.0), ZERO];
    let reps = [linalg::identity(2).unscale(2.0), linalg::projector(&psi)];
    ExchSeq::from_reps(Algebra::matrix(2)?, &reps, crate::cstar::DEFAULT_TOL)
}

/// Measure the input qubit in the standard basis and copy the outcome into `|0…0⟩` or `|1…1⟩`.
pub fn measure_and_copy_cone(depth: usize) -> Result<Cone> {
    let effects = [linalg::matrix_unit(2, 0, 0), linalg::matrix_unit(2, 1, 1)];
    Cone::measure_prepare(
        Algebra::matrix(2)?,
        &effects,
        &computational_atoms(),
        depth,
        1e-9,
    )
}

/// `(|0⟩ + e^{iφ}|1⟩)/√2` for `φ = 2πj/64`.
pub fn equator_atoms() -> Result<AtomSet> {
    let atoms = (0..EQUATOR_PHASES)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / EQUATOR_PHASES as f64;
            StateVec::pure(&[ONE, c(phi.cos(), phi.sin())])
        })
        .collect::<Result<Vec<_>>>()?;
    AtomSet::explicit(atoms)
}

/// Uniform mixture of the equator atoms.
pub fn equator_mixture() -> Result<Mixture> {
    let atoms = equator_atoms()?;
    let n = atoms.len();
    Mixture::new(atoms, vec![1.0 / n as f64; n], 1e-12)
}

/// `½(I + r^{1/3}·n(z, θ)·σ)` on the midpoints of an 8×8×8 grid of
/// `(r, z, θ) ∈ [0,1] × [−1,1] × [0,2π]`, which discretizes the uniform measure on the Bloch ball.
pub fn bloch_ball_atoms() -> Result<AtomSet> {
    let m = BLOCH_GRID_AXIS;
    let mid = |i: usize| (i as f64 + 0.5) / m as f64;
    let mut atoms = Vec::with_capacity(m * m * m);
    for i in 0..m {
        let radius = mid(i).cbrt();
        for j in 0..m {
            let z = -1.0 + 2.0 * mid(j);
            let s = (1.0 - z * z).sqrt();
            for k in 0..m {
                let theta = 2.0 * PI * mid(k);
                atoms.push(StateVec::from_density(bloch_density(
                    radius * s * theta.cos(),
                    radius * s * theta.sin(),
                    radius * z,
                ))?);
            }
        }
    }
    AtomSet::explicit(atoms)
}

/// `½(I + xX + yY + zZ)`.
pub fn bloch_density(x: f64, y: f64, z: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0 + z, 0.0), c(x, -y), c(x, y), c(1.0 - z, 0.0)]).unscale(2.0)
}

/// Uniform mixture of the Bloch-ball atoms.
pub fn bloch_ball_mixture() -> Result<Mixture> {
    let atoms = bloch_ball_atoms()?;
    let n = atoms.len();
    Mixture::new(atoms, vec![1.0 / n as f64; n], 1e-12)
}

/// Coins with the biases of [`COIN_BIASES`].
pub fn coin_grid() -> Vec<FinDist> {
    COIN_BIASES
        .iter()
        .map(|&b| FinDist::coin(b).expect("valid bias"))
        .collect()
}

/// A coin drawn uniformly from the bag, then flipped `n` times.
pub fn coin_bag(depth: usize) -> Result<ClassicalExchSeq> {
    let grid = coin_grid();
    let w = vec![1.0 / grid.len() as f64; grid.len()];
    ClassicalExchSeq::mixture(&grid, &w, depth)
}
