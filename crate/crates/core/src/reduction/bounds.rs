//! Window checks of the commutator and weighted-norm estimates used by the
//! reduction. All operator norms are Schur surrogates, which are
//! submultiplicative, so every bound below is rigorous on a window.

use serde::{Deserialize, Serialize};

use super::{CriticalSet, ReductionContext};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Complex64};
use crate::spectrum::{FloquetGrid, TruncationWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-10) + 1e-300
    }

    /// `self` when the bound holds, an inequality violation otherwise.
    pub fn require(self) -> Result<Self> {
        if self.holds() {
            Ok(self)
        } else {
            Err(Error::InequalityViolation { name: self.name, lhs: self.lhs, rhs: self.rhs })
        }
    }
}

/// `(ad_D^j X)_mn = (m1 - n1)^j X_mn` on the window.
pub fn ad_matrix(window: TruncationWindow, x: &CMat, j: u32) -> CMat {
    let n1: Vec<f64> = window.points().map(|p| p.n1 as f64).collect();
    CMat::from_fn(x.nrows(), x.ncols(), |a, b| x[(a, b)] * (n1[a] - n1[b]).powi(j as i32))
}

/// `||ad_D^j X||` for `j = 0..=r`.
pub fn ad_norms(window: TruncationWindow, x: &CMat, r: u32) -> Vec<f64> {
    (0..=r).map(|j| linalg::schur_norm(&ad_matrix(window, x, j))).collect()
}

/// All `nu` in `Z_+^r` with `nu_1 + 2 nu_2 + ... + r nu_r = r`.
pub fn partitions(r: u32) -> Vec<Vec<u32>> {
    fn go(j: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if j == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for c in 0..=left / j {
            cur[j as usize - 1] = c;
            go(j - 1, left - c * j, cur, out);
        }
        cur[j as usize - 1] = 0;
    }
    let mut out = Vec::new();
    go(r, r, &mut vec![0; r as usize], &mut out);
    out
}

fn factorial(n: u32) -> f64 {
    (2..=n).map(f64::from).product()
}

/// Right-hand side of the Leibniz-type estimate for
/// `||ad^r (X B_1 X ... B_{p-1} X)||` with `[D, B_i] = 0`, given
/// `ad_norms[j] = ||ad^j X||`, `r = ad_norms.len() - 1`, and `prod ||B_i||`.
pub fn lemma51_bound(ad_norms: &[f64], p: u32, b_norm_product: f64) -> f64 {
    let r = ad_norms.len() as u32 - 1;
    if r == 0 {
        return b_norm_product * ad_norms[0].powi(p as i32);
    }
    let mut total = 0.0;
    for nu in partitions(r) {
        let size: u32 = nu.iter().sum();
        if size > p {
            continue;
        }
        let mut coef = factorial(r);
        let mut prod = ad_norms[0].powi((p - size) as i32);
        for (j, &c) in nu.iter().enumerate() {
            coef /= factorial(j as u32 + 1).powi(c as i32) * factorial(c);
            prod *= ad_norms[j + 1].powi(c as i32);
        }
        let falling: f64 = (0..size).map(|i| f64::from(p - i)).product();
        total += coef * falling * prod;
    }
    b_norm_product * total
}

/// Stand-in for the unspecified constant `C_V(p, r)`: the Leibniz estimate
/// with unit `B_i`.
pub fn c_v_surrogate(ad_norms: &[f64], p: u32) -> f64 {
    lemma51_bound(ad_norms, p, 1.0)
}

/// Compares `||ad^r (X B_1 X ... B_{p-1} X)||` with its estimate; `b`
/// holds the diagonals of the `B_i`, so `p = b.len() + 1`.
pub fn lemma51_check(window: TruncationWindow, x: &CMat, b: &[Vec<Complex64>], r: u32) -> Result<BoundCheck> {
    let n = window.len();
    if x.nrows() != n || x.ncols() != n || b.iter().any(|d| d.len() != n) {
        return Err(Error::Precondition("operands must live on the window".into()));
    }
    let mut prod = x.clone();
    let mut b_norm = 1.0;
    for d in b {
        b_norm *= d.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let scaled = CMat::from_fn(n, n, |i, j| prod[(i, j)] * d[j]);
        prod = &scaled * x;
    }
    let lhs = linalg::schur_norm(&ad_matrix(window, &prod, r));
    let rhs = lemma51_bound(&ad_norms(window, x, r), b.len() as u32 + 1, b_norm);
    Ok(BoundCheck { name: "leibniz-commutator", lhs, rhs })
}

/// Right-hand side `p! (2^(p+1) - 1) / (1 - ||B|| ||X||)^(p+1) max_{j <= p} ||ad^j X||`
/// after checking its hypotheses.
pub fn lemma62_bound(ad_norms: &[f64], b_norm: f64) -> Result<f64> {
    let p = ad_norms.len() as u32 - 1;
    let q = b_norm * ad_norms[0];
    if !(q < 1.0) {
        return Err(Error::Precondition(format!("need ||B|| ||X|| < 1, got {q}")));
    }
    let tail = ad_norms[1..].iter().fold(0.0f64, |a, &b| a.max(b));
    if b_norm * tail > 1.0 {
        return Err(Error::Precondition(format!("need ||B|| max ||ad^j X|| <= 1, got {}", b_norm * tail)));
    }
    let m = ad_norms.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(factorial(p) * (2f64.powi(p as i32 + 1) - 1.0) / (1.0 - q).powi(p as i32 + 1) * m)
}

/// Compares `||ad^p X (1 - B X)^(-1)||` with its estimate for diagonal `B`.
pub fn lemma62_check(window: TruncationWindow, x: &CMat, b: &[Complex64], p: u32) -> Result<BoundCheck> {
    let n = window.len();
    if x.nrows() != n || b.len() != n {
        return Err(Error::Precondition("operands must live on the window".into()));
    }
    let b_norm = b.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let rhs = lemma62_bound(&ad_norms(window, x, p), b_norm)?;
    // X (1 - B X)^(-1) = (1 - X B)^(-1) X
    let a = CMat::from_fn(n, n, |i, j| {
        let y = -x[(i, j)] * b[j];
        if i == j { y + 1.0 } else { y }
    });
    let y = linalg::lu_solve(&a, x);
    let lhs = linalg::schur_norm(&ad_matrix(window, &y, p));
    Ok(BoundCheck { name: "neumann-commutator", lhs, rhs })
}

/// `||ad^r W|| <= r! 2^(2r+2) max_{j <= r} ||ad^j V||` at `(beta, lambda)`.
pub fn w_commutator_check(ctx: &ReductionContext, beta: f64, lambda: f64, r: u32) -> Result<BoundCheck> {
    let w = ctx.w_slice(beta, lambda)?;
    let lhs = linalg::schur_norm(&ad_matrix(ctx.window, &w.entries, r));
    let m = ad_norms(ctx.window, &ctx.matrix.entries, r).into_iter().fold(0.0f64, f64::max);
    let rhs = factorial(r) * 2f64.powi(2 * r as i32 + 2) * m;
    Ok(BoundCheck { name: "reduced-commutator", lhs, rhs })
}

/// Weighted critical-set norms of `X` with weight `n2^tau`, `tau <= r alpha`:
/// the column `||L^tau P_S X f||` and the off-diagonal block
/// `||L^tau P_S X^off P_S||`.
pub fn l_tau_checks(
    grid: &FloquetGrid,
    set: &CriticalSet,
    x: &CMat,
    r: u32,
    tau: f64,
) -> Result<(BoundCheck, BoundCheck)> {
    let model = &grid.model;
    if r < 2 || tau > r as f64 * model.alpha {
        return Err(Error::Precondition(format!("need r >= 2 and tau <= r alpha (r = {r}, tau = {tau})")));
    }
    let window = set.window;
    let eta = window.require(grid.eta)?;
    let idx: Vec<usize> = set.members.iter().map(|&m| window.require(m)).collect::<Result<_>>()?;
    let weight: Vec<f64> = set.members.iter().map(|m| (m.n2 as f64).powf(tau)).collect();
    let norms = ad_norms(window, x, r);
    let m = norms[0].max(2f64.powi(r as i32) * norms[r as usize]);
    let c = (grid.omega * (1.0 + model.alpha) / model.gap_constant).powi(r as i32);

    let column = weight.iter().zip(&idx).map(|(w, &i)| (x[(i, eta)] * *w).norm_sqr()).sum::<f64>().sqrt();
    let col_check = BoundCheck { name: "weighted-column", lhs: column, rhs: (2.0 * super::zeta(2.0 * r as f64)).sqrt() * c * m };

    let k = idx.len();
    let block = CMat::from_fn(k, k, |a, b| if a == b { Complex64::new(0.0, 0.0) } else { x[(idx[a], idx[b])] * weight[a] });
    let block_check =
        BoundCheck { name: "weighted-off-diagonal", lhs: linalg::schur_norm(&block), rhs: 2.0 * super::zeta(r as f64) * c * m };
    Ok((col_check, block_check))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=8).map(|r| partitions(r).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
        for nu in partitions(6) {
            assert_eq!(nu.iter().enumerate().map(|(j, c)| (j as u32 + 1) * c).sum::<u32>(), 6);
        }
    }

    #[test]
    fn leibniz_bound_power_rule() {
        // all norms 1 is d^r/dx^r (e^x)^p at 0
        for (p, r) in [(1, 3), (2, 2), (3, 4), (2, 5)] {
            let norms = vec![1.0; r as usize + 1];
            assert!((lemma51_bound(&norms, p, 1.0) - (p as f64).powi(r as i32)).abs() < 1e-9);
        }
        // single factor: the bound is ||ad^r X|| itself
        assert_eq!(lemma51_bound(&[2.0, 3.0, 5.0], 1, 1.0), 5.0);
    }

    #[test]
    fn neumann_bound_needs_small_b() {
        assert!(lemma62_bound(&[1.0, 0.5], 1.5).is_err());
        assert!(lemma62_bound(&[0.5, 3.0], 0.5).is_err());
        let b = lemma62_bound(&[0.5, 0.5], 0.5).unwrap();
        assert!((b - 3.0 / 0.75f64.powi(2) * 0.5).abs() < 1e-12);
    }
}
