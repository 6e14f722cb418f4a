//! Nonnegative and simplex-constrained least squares.
//!
//! [`nnls`] is a Lawson–Hanson active-set method. The passive-set subproblems are
//! solved through an SVD of the active columns, which keeps duplicated or nearly
//! dependent columns from breaking the iteration. An optional ridge term `μ‖x‖²`
//! selects the minimum-norm point among tied minimizers.
//!
//! [`simplex_lsq`] adds the constraint `Σx = 1` as a heavily weighted extra row,
//! solves the resulting NNLS problem and renormalizes the result exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlsOptions {
    /// Cap on outer iterations, as a multiple of the column count.
    pub max_iter_factor: usize,
    /// Ridge weight `μ` in `‖Ax − b‖² + μ‖x‖²`.
    pub ridge: f64,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions {
            max_iter_factor: 30,
            ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `argmin ‖A_P z − b‖² + μ‖z‖²` over the columns in `passive`.
fn solve_passive(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    passive: &[usize],
    ridge: f64,
) -> DVector<f64> {
    let sub = a.select_columns(passive);
    let svd = sub.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let s_max = svd.singular_values.max();
    let cutoff = s_max * f64::EPSILON * (a.nrows().max(passive.len()) as f64);
    let filtered = |rhs: &DVector<f64>| {
        let utb = u.transpose() * rhs;
        let mut scaled = DVector::zeros(svd.singular_values.len());
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                scaled[i] = utb[i] * s / (s * s + ridge);
            }
        }
        v_t.transpose() * scaled
    };
    let mut z = filtered(b);
    if ridge == 0.0 {
        // the SVD factors are only accurate to ~1e-13 relative; refine against the true residual
        for _ in 0..3 {
            z += filtered(&(b - &sub * &z));
        }
    }
    z
}

/// Lawson–Hanson NNLS: `argmin_{x ≥ 0} ‖Ax − b‖² + μ‖x‖²`.
///
/// With `start`, the iteration begins from that (clamped) point and its support
/// as the passive set instead of from zero.
pub fn nnls(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    opts: &NnlsOptions,
    start: Option<&[f64]>,
) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if n == 0 || m == 0 || b.len() != m {
        return Err(Error::Solver(format!(
            "bad problem shape: A is {m}x{n}, b has {}",
            b.len()
        )));
    }
    let tol = 10.0 * f64::EPSILON * norm1(a).max(1.0) * (m.max(n) as f64);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::Solver("starting point has the wrong length".into()));
        }
        for j in 0..n {
            if s[j] > 0.0 {
                x[j] = s[j];
                passive[j] = true;
            }
        }
    }
    let max_iter = opts.max_iter_factor.max(1) * n.max(3);
    let mut iterations = 0;
    let mut blocked = vec![false; n];
    let mut first = start.is_some() && passive.iter().any(|&p| p);

    loop {
        let mut entering = None;
        if !first {
            let grad = a.transpose() * (b - a * &x) - &x * opts.ridge;
            let candidate = (0..n)
                .filter(|&j| !passive[j] && !blocked[j])
                .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
            let Some(j) = candidate else { break };
            if grad[j] <= tol {
                break;
            }
            passive[j] = true;
            entering = Some(j);
        }
        first = false;

        // inner loop: restore feasibility of the passive-set solution
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Solver(format!(
                    "NNLS did not converge in {max_iter} iterations"
                )));
            }
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            if idx.is_empty() {
                break;
            }
            let z_p = solve_passive(a, b, &idx, opts.ridge);
            if z_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z_p[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_p[k] - x[j]);
            }
            for &j in &idx {
                if x[j] <= tol * 1e-3 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }

        match entering {
            // the column was pushed straight back out; keep it out until another one enters
            Some(j) if !passive[j] => blocked[j] = true,
            _ => blocked.fill(false),
        }
    }
    Ok(NnlsSolution { x, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Weight of the `Σx = 1` row.
    pub eq_weight: f64,
    pub nnls: NnlsOptions,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            eq_weight: 1e4,
            nnls: NnlsOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexFit {
    /// Weights on the simplex after exact renormalization.
    pub weights: Vec<f64>,
    /// `‖A w − b‖` at the renormalized weights.
    pub residual: f64,
    /// `Σw` before renormalization.
    pub raw_sum: f64,
    pub iterations: usize,
}

/// `argmin ‖A w − b‖` over the probability simplex.
pub fn simplex_lsq(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    opts: &SimplexOptions,
    start: Option<&[f64]>,
) -> Result<SimplexFit> {
    let (m, n) = a.shape();
    let mut aug = DMatrix::zeros(m + 1, n);
    aug.view_mut((0, 0), (m, n)).copy_from(a);
    aug.row_mut(m).fill(opts.eq_weight);
    let mut rhs = DVector::zeros(m + 1);
    rhs.rows_mut(0, m).copy_from(b);
    rhs[m] = opts.eq_weight;

    // compress tall systems to their triangular factor; the minimizers are unchanged
    let (sys, sys_rhs) = if m + 1 > 2 * n {
        let qr = aug.qr();
        let q = qr.q();
        (qr.r(), q.transpose() * &rhs)
    } else {
        (aug, rhs)
    };
    let sol = nnls(&sys, &sys_rhs, &opts.nnls, start)?;
    let raw_sum: f64 = sol.x.iter().sum();
    if raw_sum.is_nan() || raw_sum <= 0.0 {
        return Err(Error::Solver("simplex fit returned zero weights".into()));
    }
    let weights: Vec<f64> = sol.x.iter().map(|v| v / raw_sum).collect();
    let w = DVector::from_column_slice(&weights);
    let residual = (a * w - b).norm();
    Ok(SimplexFit {
        weights,
        residual,
        raw_sum,
        iterations: sol.iterations,
    })
}
