//! Thin helpers over `faer` for the dense window computations.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Schur-Holmgren bound `max(max row sum, max column sum)` of `|a_ij|`.
pub fn schur_norm(a: &CMat) -> f64 {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut row_sums = vec![0.0; rows];
    let mut col_max = 0.0f64;
    for j in 0..cols {
        let mut s = 0.0;
        for i in 0..rows {
            let x = a[(i, j)].norm();
            s += x;
            row_sums[i] += x;
        }
        col_max = col_max.max(s);
    }
    row_sums.into_iter().fold(col_max, f64::max)
}

/// `max |a_ij - conj(a_ji)|`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_real(a: &CMat) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].im == 0.0))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
/// Real symmetric input goes through the faster real solver.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    let failed = |e| Error::Precondition(format!("eigensolver failed: {e:?}"));
    if is_real(a) {
        let ar = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        let evd = ar.self_adjoint_eigen(Side::Lower).map_err(failed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|i| s[i]).collect();
        let vectors = CMat::from_fn(n, n, |i, j| Complex64::new(u[(i, j)], 0.0));
        Ok((values, vectors))
    } else {
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(failed)?;
        let s = evd.S().column_vector();
        let values = (0..n).map(|i| s[i].re).collect();
        Ok((values, evd.U().to_owned()))
    }
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn mat_vec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![ZERO; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

/// `<a, b>`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn column(a: &CMat, j: usize) -> Vec<Complex64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}
