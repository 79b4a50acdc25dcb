//! Rayleigh-Schrodinger coefficients of the eigenvalue `F_eta` under the
//! normalization `<f, f(beta)> = 1`, computed by the coefficient recursion
//! and, independently, by the explicit sum over rooted trees.

mod trees;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Complex64, ZERO};
use crate::perturbation::{FourierPerturbation, MatrixSlice};
use crate::spectrum::{FloquetGrid, TruncationWindow};

pub use trees::{compose_trees, decompose_tree, enumerate_trees, is_tree, RootedTree, MAX_TREE_SIZE};

/// Largest order accepted by the tree formula.
pub const MAX_TREE_ORDER: usize = 6;
/// Imaginary part tolerated in a coefficient, relative to `max(1, |lambda_M|)`.
pub const IMAG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSExpansion {
    pub ell: usize,
    /// `lambda_1, ..., lambda_ell`.
    pub lambdas: Vec<f64>,
    /// `g_1, ..., g_ell` on the window, zero at `eta`.
    pub g_vectors: Vec<Vec<Complex64>>,
    pub window: TruncationWindow,
    /// Last Cauchy difference per coefficient along a window ladder; empty
    /// unless filled from [`tail_diagnostic`].
    pub tail: Vec<f64>,
    /// `V_{eta eta}`, removed before expanding; the eigenvalue is
    /// `F + beta * shift + sum_j beta^j lambda_j`.
    pub shift: f64,
}

impl RSExpansion {
    /// `sum_{j <= ell} beta^j lambda_j`.
    pub fn lambda_sum(&self, beta: f64) -> f64 {
        self.lambdas.iter().rev().fold(0.0, |acc, l| (acc + l) * beta)
    }

    /// `sum_{j <= ell} beta^j g_j`.
    pub fn g_sum(&self, beta: f64) -> Vec<Complex64> {
        let n = self.window.len();
        let mut out = vec![ZERO; n];
        let mut b = 1.0;
        for g in &self.g_vectors {
            b *= beta;
            for (o, x) in out.iter_mut().zip(g) {
                *o += x * b;
            }
        }
        out
    }

    /// Largest `|lambda_M - other.lambda_M| / max(|lambda_M|, floor)`.
    pub fn max_relative_difference(&self, other: &RSExpansion, floor: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(&other.lambdas)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}

/// The window data the series is built from: `F_n - F`, `V^ = QVQ` and `QVf`.
#[derive(Debug, Clone)]
pub struct SeriesProblem {
    detunings: Vec<f64>,
    v_hat: CMat,
    qvf: Vec<Complex64>,
    eta_index: usize,
}

impl SeriesProblem {
    /// `v` must be Hermitian with zero `(eta, eta)` entry.
    pub fn from_matrix(detunings: Vec<f64>, v: &CMat, eta_index: usize) -> Result<Self> {
        let n = detunings.len();
        if v.nrows() != n || v.ncols() != n || eta_index >= n {
            return Err(Error::Precondition("matrix and detunings disagree".into()));
        }
        if v[(eta_index, eta_index)] != ZERO {
            return Err(Error::Precondition("V_{eta eta} must be normalized to zero".into()));
        }
        for (i, &d) in detunings.iter().enumerate() {
            if i != eta_index && d == 0.0 {
                return Err(Error::Precondition(format!("exact resonance at window position {i}")));
            }
        }
        let v_hat = CMat::from_fn(n, n, |i, j| if i == eta_index || j == eta_index { ZERO } else { v[(i, j)] });
        let qvf = (0..n).map(|i| if i == eta_index { ZERO } else { v[(i, eta_index)] }).collect();
        Ok(Self { detunings, v_hat, qvf, eta_index })
    }

    fn build(grid: &FloquetGrid, v: &FourierPerturbation, window: TruncationWindow) -> Result<(Self, f64)> {
        let eta_index = window.require(grid.eta)?;
        let (v0, shift) = v.eta_normalized(grid.eta)?;
        let detunings = grid.detunings(&window)?;
        for (i, &d) in detunings.iter().enumerate() {
            if i != eta_index && d == 0.0 {
                return Err(Error::Resonance { index: window.point(i), gap: d });
            }
        }
        let m = MatrixSlice::build(&v0, window)?;
        Ok((Self::from_matrix(detunings, &m.entries, eta_index)?, shift))
    }

    /// `Gamma_0^s x` on `Ran Q`.
    fn resolvent_power(&self, x: &[Complex64], s: u32) -> Vec<Complex64> {
        x.iter()
            .zip(&self.detunings)
            .enumerate()
            .map(|(i, (z, d))| if i == self.eta_index { ZERO } else { z * d.powi(-(s as i32)) })
            .collect()
    }

    fn real_part(z: Complex64) -> Result<f64> {
        if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
            return Err(Error::Hermiticity { imag: z.im });
        }
        Ok(z.re)
    }

    /// `g_M = -Gamma_0 V^ g_{M-1} + sum_j lambda_j Gamma_0 g_{M-j}` and
    /// `lambda_M = <QVf, g_{M-1}>`, with `V^ g_0` read as `QVf`.
    pub fn recursive(&self, ell: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
        let mut lambdas = Vec::with_capacity(ell);
        let mut gs: Vec<Vec<Complex64>> = Vec::with_capacity(ell);
        for m in 1..=ell {
            let lambda = if m == 1 {
                0.0
            } else {
                Self::real_part(linalg::inner(&self.qvf, &gs[m - 2]))?
            };
            lambdas.push(lambda);
            let mut rhs: Vec<Complex64> = if m == 1 {
                self.qvf.iter().map(|z| -z).collect()
            } else {
                linalg::mat_vec(&self.v_hat, &gs[m - 2]).into_iter().map(|z| -z).collect()
            };
            for j in 1..m {
                let l = lambdas[j - 1];
                if l != 0.0 {
                    for (r, g) in rhs.iter_mut().zip(&gs[m - j - 1]) {
                        *r += g * l;
                    }
                }
            }
            gs.push(self.resolvent_power(&rhs, 1));
        }
        Ok((lambdas, gs))
    }

    /// Sum over rooted trees, with the words
    /// `Gamma_0^{mu_1} V^ ... V^ Gamma_0^{mu_k} QVf` cached by `mu`.
    pub fn tree_formula(&self, ell: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
        if ell > MAX_TREE_ORDER {
            return Err(Error::GuardOverflow(format!("tree formula limited to order {MAX_TREE_ORDER}, got {ell}")));
        }
        let words = self.word_cache(ell);
        let scalars: HashMap<&[u32], Complex64> =
            words.iter().map(|(k, v)| (k.as_slice(), linalg::inner(&self.qvf, v))).collect();
        let n = self.detunings.len();
        let mut lambdas = Vec::with_capacity(ell);
        let mut gs = Vec::with_capacity(ell);
        for m in 1..=ell {
            // lambda-variant: sum k + N = M, all N factors scalar
            let lambda = if m == 1 {
                0.0
            } else {
                let z = summands(m, false)?
                    .par_iter()
                    .map(|s| {
                        let sign = if (m + s.n_vertices) % 2 == 0 { 1.0 } else { -1.0 };
                        s.words.iter().map(|w| scalars[w.as_slice()]).product::<Complex64>() * sign
                    })
                    .reduce(|| ZERO, |a, b| a + b);
                Self::real_part(z)?
            };
            lambdas.push(lambda);
            // g-variant: sum k + N = M + 1, first word kept as a vector
            let g = summands(m, true)?
                .par_iter()
                .map(|s| {
                    let sign = if (m + s.n_vertices + 1) % 2 == 0 { 1.0 } else { -1.0 };
                    let c: Complex64 = s.words[1..].iter().map(|w| scalars[w.as_slice()]).product::<Complex64>() * sign;
                    words[&s.words[0]].iter().map(|x| x * c).collect::<Vec<_>>()
                })
                .reduce(
                    || vec![ZERO; n],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        a
                    },
                );
            gs.push(g);
        }
        Ok((lambdas, gs))
    }

    /// Every word `mu` with `|mu| <= ell`, built right to left.
    fn word_cache(&self, ell: usize) -> HashMap<Vec<u32>, Vec<Complex64>> {
        let mut cache: HashMap<Vec<u32>, Vec<Complex64>> = HashMap::new();
        let mut frontier: Vec<Vec<u32>> = Vec::new();
        for s in 1..=ell as u32 {
            cache.insert(vec![s], self.resolvent_power(&self.qvf, s));
            frontier.push(vec![s]);
        }
        while let Some(word) = frontier.pop() {
            let total: u32 = word.iter().sum();
            if total as usize >= ell {
                continue;
            }
            let applied = linalg::mat_vec(&self.v_hat, &cache[&word]);
            for s in 1..=(ell as u32 - total) {
                let mut next = vec![s];
                next.extend_from_slice(&word);
                let v = self.resolvent_power(&applied, s);
                cache.insert(next.clone(), v);
                frontier.push(next);
            }
        }
        cache
    }
}

/// One summand index `(N, nu, k, mu)`, flattened into its words `mu(1..N)`.
#[derive(Debug, Clone)]
struct Summand {
    n_vertices: usize,
    words: Vec<Vec<u32>>,
}

/// Summand indices with `k(1) + ... + k(N) + N = M (+ 1 for the g-variant)`
/// and `|mu(j)| = k(j) + nu_j`.
fn summands(m: usize, g_variant: bool) -> Result<Vec<Summand>> {
    let target = if g_variant { m + 1 } else { m };
    let mut out = Vec::new();
    for n in 1..=target / 2 {
        for tree in enumerate_trees(n)? {
            for k in compositions(target - n, n) {
                let mut choices: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n);
                for j in 0..n {
                    let total = k[j] as usize + tree.nu()[j] as usize;
                    choices.push(compositions(total, k[j] as usize));
                }
                let mut idx = vec![0usize; n];
                'outer: loop {
                    out.push(Summand { n_vertices: n, words: (0..n).map(|j| choices[j][idx[j]].clone()).collect() });
                    for j in (0..n).rev() {
                        idx[j] += 1;
                        if idx[j] < choices[j].len() {
                            continue 'outer;
                        }
                        idx[j] = 0;
                    }
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Compositions of `total` into `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<u32>> {
    fn go(left: usize, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for c in 1..=left.saturating_sub(parts - 1) {
            cur.push(c as u32);
            go(left - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 && total >= parts {
        go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn expansion(
    ell: usize,
    window: TruncationWindow,
    shift: f64,
    (lambdas, g_vectors): (Vec<f64>, Vec<Vec<Complex64>>),
) -> RSExpansion {
    RSExpansion { ell, lambdas, g_vectors, window, tail: Vec::new(), shift }
}

fn require_order(ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::Precondition("expansion order must be at least 1".into()));
    }
    Ok(())
}

/// Coefficients by the recursion on the window.
pub fn rs_recursive(grid: &FloquetGrid, v: &FourierPerturbation, ell: usize, window: TruncationWindow) -> Result<RSExpansion> {
    require_order(ell)?;
    let (p, shift) = SeriesProblem::build(grid, v, window)?;
    Ok(expansion(ell, window, shift, p.recursive(ell)?))
}

/// Coefficients by the rooted-tree sum on the window; `ell <= 6`.
pub fn rs_tree_formula(
    grid: &FloquetGrid,
    v: &FourierPerturbation,
    ell: usize,
    window: TruncationWindow,
) -> Result<RSExpansion> {
    require_order(ell)?;
    if ell > MAX_TREE_ORDER {
        return Err(Error::GuardOverflow(format!("tree formula limited to order {MAX_TREE_ORDER}, got {ell}")));
    }
    let (p, shift) = SeriesProblem::build(grid, v, window)?;
    Ok(expansion(ell, window, shift, p.tree_formula(ell)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostic {
    pub ladder: Vec<TruncationWindow>,
    /// `lambdas[i][M - 1]` on `ladder[i]`.
    pub lambdas: Vec<Vec<f64>>,
    /// `|lambda_M(ladder[i + 1]) - lambda_M(ladder[i])|`.
    pub differences: Vec<Vec<f64>>,
    /// Last difference below `1e-8 |lambda_M|` (or exactly zero).
    pub converged: Vec<bool>,
}

impl TailDiagnostic {
    pub fn last_differences(&self) -> Vec<f64> {
        self.differences.last().cloned().unwrap_or_default()
    }
}

/// Recursion coefficients along an increasing window ladder.
pub fn tail_diagnostic(
    grid: &FloquetGrid,
    v: &FourierPerturbation,
    ell: usize,
    ladder: &[TruncationWindow],
) -> Result<TailDiagnostic> {
    if ladder.len() < 2 || ladder.windows(2).any(|w| !w[0].is_subset_of(&w[1]) || w[0] == w[1]) {
        return Err(Error::Precondition("tail diagnostic needs a strictly increasing ladder of two or more windows".into()));
    }
    let lambdas: Vec<Vec<f64>> = ladder
        .iter()
        .map(|&w| rs_recursive(grid, v, ell, w).map(|e| e.lambdas))
        .collect::<Result<_>>()?;
    let differences: Vec<Vec<f64>> =
        lambdas.windows(2).map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| (b - a).abs()).collect()).collect();
    let last = lambdas.last().expect("non-empty ladder");
    let converged = differences
        .last()
        .expect("ladder of two or more")
        .iter()
        .zip(last)
        .map(|(d, l)| *d == 0.0 || *d < 1e-8 * l.abs())
        .collect();
    Ok(TailDiagnostic { ladder: ladder.to_vec(), lambdas, differences, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{LatticeIndex, SpectrumModel};

    const PHI: f64 = 1.618_033_988_749_895;

    fn grid() -> FloquetGrid {
        FloquetGrid::new(SpectrumModel::quadratic(), PHI, LatticeIndex::new(0, 1).unwrap()).unwrap()
    }

    fn band() -> FourierPerturbation {
        FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.05).unwrap().with_phase(0.7)
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(4, 2), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        assert_eq!(compositions(5, 3).len(), 6);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn first_orders_match_closed_forms() {
        let w = TruncationWindow::new(6, 6).unwrap();
        let g = grid();
        let v = band();
        let e = rs_recursive(&g, &v, 3, w).unwrap();
        assert_eq!(e.lambdas[0], 0.0);
        let (v0, _) = v.eta_normalized(g.eta).unwrap();
        let m = MatrixSlice::build(&v0, w).unwrap();
        let d = g.detunings(&w).unwrap();
        let eta = w.index_of(g.eta).unwrap();
        let mut l2 = 0.0;
        for i in 0..w.len() {
            if i == eta {
                assert_eq!(e.g_vectors[0][i], ZERO);
                continue;
            }
            let g1 = -m.entries[(i, eta)] / d[i];
            assert!((e.g_vectors[0][i] - g1).norm() < 1e-15);
            l2 -= m.entries[(i, eta)].norm_sqr() / d[i];
        }
        assert!((e.lambdas[1] - l2).abs() < 1e-14 * l2.abs().max(1.0));
    }

    #[test]
    fn zero_and_commuting_perturbations() {
        let w = TruncationWindow::new(3, 4).unwrap();
        let e = rs_recursive(&grid(), &FourierPerturbation::zero(), 4, w).unwrap();
        assert!(e.lambdas.iter().all(|&l| l == 0.0));
        let diag = FourierPerturbation::table((1..=4).map(|p| ((0, p, p), Complex64::new(p as f64, 0.0)))).unwrap();
        let e = rs_tree_formula(&grid(), &diag, 4, w).unwrap();
        assert_eq!(e.shift, 1.0);
        assert!(e.lambdas.iter().all(|&l| l == 0.0));
        assert!(e.g_vectors.iter().flatten().all(|z| *z == ZERO));
    }

    #[test]
    fn tree_formula_matches_recursion() {
        let w = TruncationWindow::new(5, 6).unwrap();
        let a = rs_recursive(&grid(), &band(), 6, w).unwrap();
        let b = rs_tree_formula(&grid(), &band(), 6, w).unwrap();
        assert!(a.max_relative_difference(&b, 1e-300) < 1e-10);
        for (x, y) in a.g_vectors.iter().zip(&b.g_vectors) {
            let scale = linalg::norm(x);
            let diff: Vec<Complex64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            assert!(linalg::norm(&diff) <= 1e-10 * scale);
        }
        assert!(rs_tree_formula(&grid(), &band(), 7, w).is_err());
    }

    #[test]
    fn phase_of_f_does_not_matter() {
        let w = TruncationWindow::new(4, 4).unwrap();
        let g = grid();
        let (v0, _) = band().eta_normalized(g.eta).unwrap();
        let m = MatrixSlice::build(&v0, w).unwrap();
        let d = g.detunings(&w).unwrap();
        let eta = w.index_of(g.eta).unwrap();
        let u = Complex64::from_polar(1.0, 1.1);
        let rotated = CMat::from_fn(w.len(), w.len(), |i, j| {
            let mut z = m.entries[(i, j)];
            if i == eta {
                z *= u;
            }
            if j == eta {
                z *= u.conj();
            }
            z
        });
        let a = SeriesProblem::from_matrix(d.clone(), &m.entries, eta).unwrap().recursive(5).unwrap().0;
        let b = SeriesProblem::from_matrix(d, &rotated, eta).unwrap().recursive(5).unwrap().0;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn ladder_diagnostic() {
        let g = grid();
        let ladder: Vec<_> = [(4, 4), (6, 6), (8, 8)].iter().map(|&(a, b)| TruncationWindow::new(a, b).unwrap()).collect();
        let t = tail_diagnostic(&g, &band(), 1, &ladder).unwrap();
        assert!(t.lambdas.iter().all(|l| l[0] == 0.0) && t.converged[0]);
        // the band reaches |k| <= 2: widening n1 beyond the coupling range changes nothing at order 2
        let ladder: Vec<_> = [(10, 4), (14, 4)].iter().map(|&(a, b)| TruncationWindow::new(a, b).unwrap()).collect();
        let t = tail_diagnostic(&g, &band(), 2, &ladder).unwrap();
        assert_eq!(t.differences[0][1], 0.0);
        assert!(tail_diagnostic(&g, &band(), 2, &ladder[..1]).is_err());
    }

    #[test]
    fn resonant_window_is_rejected() {
        let g = FloquetGrid::new(SpectrumModel::quadratic(), 1.0, LatticeIndex::new(0, 1).unwrap()).unwrap();
        let w = TruncationWindow::new(5, 3).unwrap();
        assert_eq!(rs_recursive(&g, &band(), 2, w).unwrap_err().name(), "resonance");
    }
}
