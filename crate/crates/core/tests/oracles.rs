//! Derived reference values checked against independent computations.

mod common;

use qdf::classical::{self, ClassicalExchSeq, FinDist, Kernel};
use qdf::cstar::Algebra;
use qdf::definetti::{
    factorization_error, mediating_map, moment_analysis, reconstruct, synthesize, uniqueness_check,
    Cone, Mixture, ReconstructOptions, MIN_NORM_RIDGE,
};
use qdf::fixtures;
use qdf::linalg;

use common::*;

#[test]
fn singlet_oracle_matches_the_analytic_bound() {
    // For a separable symmetric ρ with a = ⟨ψ⁻|ρ|ψ⁻⟩ ≤ 1/4, ‖ψ⁻ − ρ‖² ≥ 4(1 − a)²/3 ≥ 3/4,
    // attained by σ = I/2, which also fits level 1 exactly.
    let grid = bloch_ball_grid();
    assert_eq!(grid.len(), 10_000);
    let r_min = singlet_residual_oracle(&grid, 2000);
    assert!((r_min - 0.75f64.sqrt()).abs() < 1e-6, "oracle {r_min}");
}

#[test]
fn singlet_residual_over_the_bloch_grid_matches_the_oracle() {
    // every 7th grid point, with the repeated center kept once
    let grid = bloch_ball_grid();
    let points = std::iter::once(&grid[0]).chain(grid.iter().skip(1000).step_by(7));
    let atoms = qdf::definetti::AtomSet::explicit(
        points
            .map(|r| state(fixtures::bloch_density(r[0], r[1], r[2])))
            .collect(),
    )
    .unwrap();
    let rec = reconstruct(
        &fixtures::singlet().unwrap(),
        &atoms,
        &ReconstructOptions::default(),
    )
    .unwrap();
    let r_min = singlet_residual_oracle(&bloch_ball_grid(), 2000);
    assert!(rec.residual >= 0.9 * r_min);
    assert!((rec.residual - r_min).abs() < 1e-6);
}

#[test]
fn vandermonde_rank_predicts_coin_degeneracy() {
    let biases = [0.1, 0.3, 0.5, 0.7, 0.9];
    let grid: Vec<FinDist> = biases.iter().map(|&b| FinDist::coin(b).unwrap()).collect();
    let atoms = classical::grid_atoms(&grid).unwrap();
    for depth in 1..=9 {
        let oracle = vandermonde_rank(&biases, depth);
        assert_eq!(oracle, (depth + 1).min(5));
        assert_eq!(moment_analysis(&atoms, depth).rank, oracle, "depth {depth}");
    }
    let w = [0.1, 0.25, 0.3, 0.2, 0.15];
    let seq = ClassicalExchSeq::mixture(&grid, &w, 9).unwrap();
    let deep = classical::hs_uniqueness(&seq, &grid, 10, 3).unwrap();
    assert!(!deep.degenerate && deep.unique);
    assert!(deep.max_pairwise_distance <= 1e-8);
    let rec = classical::hs_reconstruct(&seq, &grid, &ReconstructOptions::default()).unwrap();
    for (a, b) in rec.weights.iter().zip(w) {
        assert!((a - b).abs() < 1e-6);
    }
    let shallow = classical::hs_uniqueness(&seq.truncated(3).unwrap(), &grid, 10, 3).unwrap();
    assert!(shallow.degenerate && !shallow.unique);
    assert_eq!(shallow.moment_rank, 4);
}

#[test]
fn biased_pair_by_direct_multiplication() {
    let p = [0.25, 0.75];
    let expected: Vec<f64> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(i, j)| p[i] * p[j])
        .collect();
    let prod = classical::product_measure(&FinDist::coin(0.25).unwrap(), 2).unwrap();
    assert_eq!(prod.probs(), expected.as_slice());
    assert_eq!(expected, vec![0.0625, 0.1875, 0.1875, 0.5625]);
}

#[test]
fn kernel_composition_matches_double_sum() {
    let mut r = rng(17);
    let f = random_stochastic(&mut r, 3, 4);
    let g = random_stochastic(&mut r, 4, 2);
    let space = |k: usize| (0..k).map(|i| format!("s{i}")).collect::<Vec<_>>();
    let kf = Kernel::from_matrix(space(3), space(4), &f).unwrap();
    let kg = Kernel::from_matrix(space(4), space(2), &g).unwrap();
    let composed = classical::kleisli_compose(&kf, &kg).unwrap();
    let expected = stochastic_product(&f, &g);
    for (row, exp) in composed.rows().iter().zip(&expected) {
        for (a, b) in row.probs().iter().zip(exp) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn factorization_error_bounds() {
    let cone = fixtures::measure_and_copy_cone(3).unwrap();
    let atoms = fixtures::computational_atoms();
    let med = mediating_map(&cone, &atoms, &ReconstructOptions::default()).unwrap();
    assert!(factorization_error(&cone, &med).unwrap() <= 1e-7);
    // +0.1 on one atom, renormalized: level-1 error is 2·0.1/1.1 on the affected probe
    let mut w = med.probe_weights()[0].clone();
    w[0] += 0.1;
    let perturbed = med.clone().with_probe_weights(0, w).unwrap();
    let err = factorization_error(&cone, &perturbed).unwrap();
    assert!(err > 1e-3);
    // point-mass cone with the exact point-mass mediator
    let sigma = qdf::cstar::StateVec::basis(2, 1).unwrap();
    let point = Cone::constant(Algebra::matrix(2).unwrap(), &sigma, 3, 1e-9).unwrap();
    let med = mediating_map(&point, &atoms, &ReconstructOptions::default()).unwrap();
    assert!(factorization_error(&point, &med).unwrap() <= 1e-12);
}

#[test]
fn duplicated_atom_flags_degeneracy() {
    let zero = qdf::cstar::StateVec::basis(2, 0).unwrap();
    let one = qdf::cstar::StateVec::basis(2, 1).unwrap();
    let atoms =
        qdf::definetti::AtomSet::explicit_allow_duplicates(vec![zero.clone(), one, zero]).unwrap();
    let report =
        uniqueness_check(&fixtures::measure_and_copy_cone(3).unwrap(), &atoms, 10, 2).unwrap();
    assert!(report.degenerate);
    assert_eq!(report.determined_atoms, vec![1]);
}

#[test]
fn equator_min_norm_weights_are_uniform() {
    let mix = fixtures::equator_mixture().unwrap();
    let seq = synthesize(&mix, 4).unwrap();
    let atoms = fixtures::equator_atoms().unwrap();
    // Fourier modes |k| ≤ 4 span the moments of equator states
    assert_eq!(moment_analysis(&atoms, 4).rank, 9);
    let opts = ReconstructOptions::default().min_norm(MIN_NORM_RIDGE);
    let rec = reconstruct(&seq, &atoms, &opts).unwrap();
    for w in rec.mixture.weights() {
        assert!((w - 1.0 / 64.0).abs() < 1e-10);
    }
    assert!(rec.residual < 1e-10);
}

#[test]
fn unknown_qubit_barycenter_is_maximally_mixed() {
    let mix = fixtures::bloch_ball_mixture().unwrap();
    let seq = synthesize(&mix, 3).unwrap();
    let rec = reconstruct(&seq, mix.atoms(), &ReconstructOptions::default()).unwrap();
    assert!(rec.residual < 1e-8);
    let bary = rec.mixture.barycenter().unwrap();
    assert!(linalg::max_abs(&(bary.density() - linalg::identity(2).unscale(2.0))) < 1e-8);
}

#[test]
fn second_circuit_point_mass_levels() {
    let mix = Mixture::point_mass(fixtures::maximally_mixed_atom(), 0).unwrap();
    let seq = synthesize(&mix, 2).unwrap();
    assert!(linalg::max_abs(&(seq.level(2).density() - linalg::identity(4).unscale(4.0))) < 1e-16);
}
