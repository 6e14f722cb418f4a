//! Independent reference computations and random generators shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use qdf::cstar::{Algebra, Element, StateVec};
use qdf::linalg::{self, c, CMat};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(
            StandardNormal.sample(&mut *rng),
            StandardNormal.sample(&mut *rng),
        )
    })
}

pub fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let g = gaussian_matrix(rng, d, d);
    let w = &g * g.adjoint();
    let tr = linalg::trace(&w).re;
    w.unscale(tr)
}

pub fn random_element(rng: &mut ChaCha8Rng, algebra: &Algebra) -> Element {
    let mats = algebra
        .blocks()
        .iter()
        .map(|&d| gaussian_matrix(rng, d, d))
        .collect();
    Element::new(algebra.clone(), mats).unwrap()
}

/// Uniform point of the probability simplex.
pub fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random injection `n ↪ m`.
pub fn random_injection(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    (0..n)
        .map(|_| pool.swap_remove(rng.random_range(0..pool.len())))
        .collect()
}

/// Effects `S^{-1/2} A_k A_k† S^{-1/2}` summing to the identity.
pub fn random_povm(rng: &mut ChaCha8Rng, d: usize, outcomes: usize) -> Vec<CMat> {
    let raw: Vec<CMat> = (0..outcomes)
        .map(|_| {
            let a = gaussian_matrix(rng, d, d);
            &a * a.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMat::zeros(d, d), |acc, g| acc + g);
    let eig = total.symmetric_eigen();
    let inv_sqrt =
        DVector::from_iterator(d, eig.eigenvalues.iter().map(|v| c(1.0 / v.sqrt(), 0.0)));
    let s = &eig.eigenvectors * CMat::from_diagonal(&inv_sqrt) * eig.eigenvectors.adjoint();
    raw.iter().map(|g| &s * g * &s).collect()
}

/// Real rank of a matrix by Gaussian elimination with partial pivoting.
pub fn gaussian_rank(mut m: Vec<Vec<f64>>, rel_tol: f64) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
        else {
            break;
        };
        if m[pivot][col].abs() <= rel_tol * scale {
            continue;
        }
        m.swap(rank, pivot);
        let (top, bottom) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in bottom {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of the moment vectors of coins with the given biases up to depth `n`.
///
/// A mixture of coins is determined at depth `n` by the power moments `E[p^j]`,
/// `j ≤ n`, so the rank is that of the Vandermonde matrix `[p_k^j]`.
pub fn vandermonde_rank(biases: &[f64], depth: usize) -> usize {
    let rows = biases
        .iter()
        .map(|&p| (0..=depth).map(|j| p.powi(j as i32)).collect())
        .collect();
    gaussian_rank(rows, 1e-12)
}

/// Points of the Bloch ball on a spherical grid: 10 radii (including the
/// center), 25 polar and 40 azimuthal values, 10⁴ points in total.
pub fn bloch_ball_grid() -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(10_000);
    for i in 0..10 {
        let r = i as f64 / 9.0;
        for j in 0..25 {
            let z = -1.0 + 2.0 * (j as f64 + 0.5) / 25.0;
            let s = (1.0 - z * z).sqrt();
            for k in 0..40 {
                let t = 2.0 * PI * k as f64 / 40.0;
                out.push([r * s * t.cos(), r * s * t.sin(), r * z]);
            }
        }
    }
    out
}

/// Smallest `sqrt(‖I/2 − E σ‖_F² + ‖ψ⁻ − E σ⊗σ‖_F²)` over mixtures of grid states,
/// computed by Frank–Wolfe with exact line search in Pauli coordinates.
///
/// With `σ = ½(1 + r·P)` and `R = (1, r)`, `σ⊗σ = ¼ Σ R_i R_j P_i⊗P_j`, the
/// singlet is `¼(1 − XX − YY − ZZ)` and `‖¼ Σ c_ij P_i⊗P_j‖_F² = ¼ Σ c_ij²`.
pub fn singlet_residual_oracle(grid: &[[f64; 3]], iterations: usize) -> f64 {
    let feature = |r: &[f64; 3]| -> Vec<f64> {
        let big_r = [1.0, r[0], r[1], r[2]];
        let mut f: Vec<f64> = r
            .iter()
            .map(|x| x * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                f.push(0.5 * big_r[i] * big_r[j]);
            }
        }
        f
    };
    let mut target = vec![0.0; 3];
    for i in 0..4 {
        for j in 0..4 {
            let t = if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                -1.0
            };
            target.push(0.5 * t);
        }
    }
    let feats: Vec<Vec<f64>> = grid.iter().map(feature).collect();
    let mut x = feats[0].clone();
    for _ in 0..iterations {
        let g: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
        let best = feats
            .iter()
            .min_by(|a, b| dot(a, &g).total_cmp(&dot(b, &g)))
            .unwrap();
        let dir: Vec<f64> = best.iter().zip(&x).map(|(a, b)| a - b).collect();
        let denom = dot(&dir, &dir);
        if denom == 0.0 {
            break;
        }
        let step = (-dot(&g, &dir) / denom).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += step * di;
        }
    }
    x.iter()
        .zip(&target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_y f[x][y] g[y][z]` by explicit summation.
pub fn stochastic_product(f: &[Vec<f64>], g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    f.iter()
        .map(|row| {
            (0..g[0].len())
                .map(|z| row.iter().zip(g).map(|(p, gy)| p * gy[z]).sum())
                .collect()
        })
        .collect()
}

pub fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| dirichlet(rng, cols)).collect()
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}

pub fn state(m: CMat) -> StateVec {
    StateVec::from_density(m).unwrap()
}
