//! Dense complex matrix helpers shared by the algebra, channel and sequence modules.
//!
//! Tensor factors are laid out in Kronecker order: the basis vector
//! `|x_1 ... x_n>` of `(C^d)^{⊗n}` has index `Σ x_i d^{n-i}`, so the first
//! factor is the most significant digit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `|i><j|` in dimension `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn projector(psi: &[Complex64]) -> CMat {
    let n = psi.len();
    CMat::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `M - M†`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> DVector<f64> {
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    let mut vals = hermitian_part(m).symmetric_eigenvalues();
    vals.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].re;
    }
    hermitian_eigenvalues(m).min()
}

/// Operator (spectral) norm.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Trace norm (sum of singular values). Hermitian inputs take the eigenvalue route.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    if m.is_square() && (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO)) {
        return m.diagonal().iter().map(|z| z.norm()).sum();
    }
    if hermitian_deviation(m) <= 1e-12 * scale {
        hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
    } else {
        m.clone().singular_values().sum()
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `m^{⊗n}`, with the empty power equal to the 1×1 identity.
pub fn kron_power(m: &CMat, n: usize) -> CMat {
    let mut out = identity(1);
    for _ in 0..n {
        out = kron(&out, m);
    }
    out
}

/// Trace out the trailing factor of dimension `tail` from a matrix on `head ⊗ tail`.
pub fn partial_trace_tail(m: &CMat, tail: usize) -> CMat {
    let head = m.nrows() / tail;
    CMat::from_fn(head, head, |i, j| {
        (0..tail).map(|k| m[(i * tail + k, j * tail + k)]).sum()
    })
}

/// Trace out the leading factor of dimension `head` from a matrix on `head ⊗ tail`.
pub fn partial_trace_head(m: &CMat, head: usize) -> CMat {
    let tail = m.nrows() / head;
    CMat::from_fn(tail, tail, |i, j| {
        (0..head).map(|k| m[(k * tail + i, k * tail + j)]).sum()
    })
}

/// Index map of the permutation unitary on `(C^d)^{⊗n}` that moves factor `i` to slot `perm[i]`.
pub fn factor_permutation_indices(d: usize, n: usize, perm: &[usize]) -> Vec<usize> {
    let dim = d.pow(n as u32);
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * d;
    }
    (0..dim)
        .map(|x| {
            let mut rest = x;
            let mut y = 0;
            for i in 0..n {
                let digit = rest / strides[i];
                rest %= strides[i];
                y += digit * strides[perm[i]];
            }
            y
        })
        .collect()
}

/// Conjugate by the permutation unitary described by an index map (`out[map[x], map[x']] = in[x, x']`).
pub fn conjugate_by_index_map(m: &CMat, map: &[usize]) -> CMat {
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for x in 0..n {
        for xp in 0..n {
            out[(map[x], map[xp])] = m[(x, xp)];
        }
    }
    out
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis for the Frobenius
/// inner product: diagonal entries, then `√2·Re` and `√2·Im` of the strict upper triangle.
pub fn hermitian_coordinates(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out.push(r2 * z.re);
            out.push(r2 * z.im);
        }
    }
    out
}

/// Inverse of [`hermitian_coordinates`].
pub fn from_hermitian_coordinates(n: usize, coords: &[f64]) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(coords[i], 0.0);
    }
    let r2 = std::f64::consts::SQRT_2;
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = c(coords[k] / r2, coords[k + 1] / r2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Exact integer power check: returns `n` with `d^n == dim`.
pub fn level_of(d: usize, dim: usize) -> Option<usize> {
    if d < 2 {
        return if dim == 1 { Some(0) } else { None };
    }
    let mut n = 0;
    let mut acc = 1usize;
    while acc < dim {
        acc = acc.checked_mul(d)?;
        n += 1;
    }
    (acc == dim).then_some(n)
}
