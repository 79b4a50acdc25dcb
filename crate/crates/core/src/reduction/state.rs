use serde::{Deserialize, Serialize};

use super::{IndexRole, ReductionContext};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Complex64, ZERO};
use crate::perturbation::FourierPerturbation;
use crate::spectrum::{FloquetGrid, LatticeIndex};

/// Relative residual accepted for the reduced eigenvector.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Largest admissible `||beta Gamma(beta, lambda) W_S^off||`.
pub const CONTRACTION_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VnValue {
    pub value: f64,
    /// Bound on the omitted harmonics; zero for finite bands.
    pub tail_bound: f64,
}

/// `v_n(lambda) = sum_{k >= 1} |V(k, n2, n2)|^2 / (omega^2 k^2 - (F_n - F - lambda)^2)`,
/// summed to `k_sum` with the tail bounded through `|V(k, p, p)| <= v_norm`.
pub fn v_n(
    grid: &FloquetGrid,
    v: &FourierPerturbation,
    n: LatticeIndex,
    lambda: f64,
    k_sum: usize,
    v_norm: f64,
) -> Result<VnValue> {
    let x = grid.detuning(n)? - lambda;
    let harmonics: Vec<f64> =
        (1..=k_sum as i64).map(|k| Ok(v.coeff(k, n.n2, n.n2)?.norm_sqr())).collect::<Result<_>>()?;
    let complete = v.band_limit.is_some_and(|b| b as usize <= k_sum);
    Ok(vn_from_harmonics(grid.omega, x, &harmonics, complete, v_norm))
}

pub(super) fn vn_from_harmonics(omega: f64, x: f64, harmonics: &[f64], complete: bool, v_norm: f64) -> VnValue {
    let w2 = omega * omega;
    let value = harmonics
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = (i + 1) as f64;
            a / (w2 * k * k - x * x)
        })
        .sum();
    let tail_bound = if complete {
        0.0
    } else {
        // sum_{k > K} 1 / (k^2 - 1) = (1/K + 1/(K+1)) / 2
        let k = harmonics.len().max(1) as f64;
        v_norm * v_norm / w2 * 0.5 * (1.0 / k + 1.0 / (k + 1.0))
    };
    VnValue { value, tail_bound }
}

/// `w_n = (W_nn - 2 beta x v_n) / (1 + 2 beta^2 v_n)` with `x = F_n - F - lambda`.
pub fn w_n(w_nn: f64, beta: f64, x: f64, v_n: f64) -> f64 {
    (w_nn - 2.0 * beta * x * v_n) / (1.0 + 2.0 * beta * beta * v_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainVariant {
    /// `|F_n - F - lambda + beta W_nn| >= psi~(n2)`
    Standard,
    /// `|F_n - F - lambda + beta w_n| >= psi~(n2)`
    Strong,
}

/// Reduced data at one `(beta, lambda)`.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub beta: f64,
    pub lambda: f64,
    /// Columns of `W` at the critical indices followed by `eta`.
    pub w_columns: CMat,
    /// `W_nn` per critical member.
    pub w_nn: Vec<f64>,
    pub v_diag: Vec<VnValue>,
    /// `w_n` per critical member.
    pub w_diag: Vec<f64>,
    /// Smallest `|F_n - F - lambda + beta W_nn| / psi~(n2)` over the window's critical set.
    pub standard_margin: f64,
    pub strong_margin: f64,
    /// Critical indices outside the window keep `|F_n - F - lambda| - 2 |beta| ||V|| >= psi~(n2)`.
    pub tail_safe: bool,
    /// `|beta| <= 1 / C_g(r)` as well; false when `V` lacks `r` commutators.
    pub certified: bool,
    /// `||beta Gamma(beta, lambda) W_S^off||`.
    pub contraction: f64,
    pub g_s: Vec<Complex64>,
    /// Window vector with zero `eta` component.
    pub g: Vec<Complex64>,
    pub g_value: f64,
    /// `||(K + beta V - F - lambda) g + beta Q V f||` over the window.
    pub residual: f64,
}

impl ReducedState {
    pub fn domain_condition(&self, variant: DomainVariant) -> bool {
        match variant {
            DomainVariant::Standard => self.standard_margin >= 1.0,
            DomainVariant::Strong => self.strong_margin >= 1.0,
        }
    }

    /// Window-level membership in the domain: standard condition plus tail safety.
    pub fn in_domain(&self) -> bool {
        self.domain_condition(DomainVariant::Standard) && self.tail_safe
    }

    pub fn g_norm(&self) -> f64 {
        linalg::norm(&self.g)
    }
}

#[derive(Debug, Clone)]
pub struct EigenvectorSolution {
    pub g_s: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub residual: f64,
}

impl ReductionContext {
    /// Assembles the reduced state and solves for `g`. Only the `(beta,
    /// lambda)` box is enforced; the domain verdicts are recorded.
    pub fn reduced_state(&self, beta: f64, lambda: f64) -> Result<ReducedState> {
        self.check_box(beta, lambda)?;
        let s = &self.critical_indices;
        let m = s.len();
        let mut cols = s.clone();
        cols.push(self.eta_index);
        let wc = self.w_columns_unchecked(beta, lambda, &cols)?;
        let profile = &self.profile;

        let mut w_nn = Vec::with_capacity(m);
        let mut v_diag = Vec::with_capacity(m);
        let mut w_diag = Vec::with_capacity(m);
        let mut standard_margin = f64::INFINITY;
        let mut strong_margin = f64::INFINITY;
        for (pos, &i) in s.iter().enumerate() {
            let n2 = self.critical.members[pos].n2;
            let x = self.detunings[i] - lambda;
            let wnn = wc[(i, pos)].re;
            let vn = vn_from_harmonics(
                self.grid.omega,
                x,
                &self.diagonal_harmonics[pos],
                self.harmonics_complete,
                self.v_norm,
            );
            let wn = w_n(wnn, beta, x, vn.value);
            let psi = profile.psi_tilde(n2);
            standard_margin = standard_margin.min((x + beta * wnn).abs() / psi);
            strong_margin = strong_margin.min((x + beta * wn).abs() / psi);
            w_nn.push(wnn);
            v_diag.push(vn);
            w_diag.push(wn);
        }
        let tail_safe = self.critical.outside.iter().all(|(n, d)| {
            (d - lambda).abs() - 2.0 * beta.abs() * self.v_norm >= profile.psi_tilde(n.n2)
        });

        // g_S = -beta (1 + beta Gamma W_S^off)^(-1) Gamma P_S W f
        let gamma: Vec<f64> =
            (0..m).map(|p| 1.0 / (self.detunings[s[p]] - lambda + beta * w_nn[p])).collect();
        let off = CMat::from_fn(m, m, |a, b| {
            if a == b { ZERO } else { wc[(s[a], b)] * (beta * gamma[a]) }
        });
        let contraction = linalg::schur_norm(&off);
        let g_s: Vec<Complex64> = if m == 0 || beta == 0.0 {
            vec![ZERO; m]
        } else {
            let sys = CMat::from_fn(m, m, |a, b| if a == b { off[(a, b)] + 1.0 } else { off[(a, b)] });
            let rhs = CMat::from_fn(m, 1, |a, _| wc[(s[a], m)] * (-beta * gamma[a]));
            let x = linalg::lu_solve(&sys, &rhs);
            let out: Vec<Complex64> = (0..m).map(|a| x[(a, 0)]).collect();
            if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::ContractionFailure(format!(
                    "singular critical system at beta = {beta:e}, lambda = {lambda:e}"
                )));
            }
            out
        };

        // g = g_S - beta Gamma_lambda P_R W (g_S + f)
        let n = self.len();
        let mut wh: Vec<Complex64> = linalg::column(&wc, m);
        for (p, gp) in g_s.iter().enumerate() {
            if *gp == ZERO {
                continue;
            }
            for (i, w) in wh.iter_mut().enumerate() {
                *w += wc[(i, p)] * gp;
            }
        }
        let mut g = vec![ZERO; n];
        for i in 0..n {
            g[i] = match self.roles[i] {
                IndexRole::Eta => ZERO,
                IndexRole::Critical(p) => g_s[p],
                IndexRole::Regular => wh[i] * (-beta / (self.detunings[i] - lambda)),
            };
        }

        let g_value = self.g_value(beta, &g)?;
        let residual = self.residual(beta, lambda, &g);
        let certified = self.c_g.is_some_and(|c| beta.abs() * c <= 1.0);
        Ok(ReducedState {
            beta,
            lambda,
            w_columns: wc,
            w_nn,
            v_diag,
            w_diag,
            standard_margin,
            strong_margin,
            tail_safe,
            certified,
            contraction,
            g_s,
            g,
            g_value,
            residual,
        })
    }

    /// `G(beta, lambda) = beta <V f, g>`, which must be real.
    pub fn g_value(&self, beta: f64, g: &[Complex64]) -> Result<f64> {
        let vf = linalg::column(&self.matrix.entries, self.eta_index);
        let z = linalg::inner(&vf, g) * beta;
        if z.im.abs() > 1e-12 {
            return Err(Error::Hermiticity { imag: z.im });
        }
        Ok(z.re)
    }

    /// `||(K + beta V - F - lambda) g + beta Q V f||` on the window.
    pub fn residual(&self, beta: f64, lambda: f64, g: &[Complex64]) -> f64 {
        let v = &self.matrix.entries;
        let mut h: Vec<Complex64> = g.to_vec();
        h[self.eta_index] += 1.0;
        let vh = linalg::mat_vec(v, &h);
        let r: Vec<Complex64> = (0..self.len())
            .map(|i| {
                if i == self.eta_index {
                    ZERO
                } else {
                    g[i] * (self.detunings[i] - lambda) + vh[i] * beta
                }
            })
            .collect();
        linalg::norm(&r)
    }

    /// Strict eigenvector solve: requires the domain condition, the contraction
    /// margin and a small residual.
    pub fn solve_eigenvector(&self, beta: f64, lambda: f64) -> Result<EigenvectorSolution> {
        let st = self.reduced_state(beta, lambda)?;
        if !st.in_domain() {
            return Err(Error::Domain {
                beta,
                lambda,
                reason: format!(
                    "critical diagonal condition fails (margin {:.3e}, tail safe {})",
                    st.standard_margin, st.tail_safe
                ),
            });
        }
        if st.contraction > CONTRACTION_LIMIT {
            return Err(Error::ContractionFailure(format!(
                "||beta Gamma W_S^off|| = {:.3e} exceeds {CONTRACTION_LIMIT}",
                st.contraction
            )));
        }
        let tolerance = RESIDUAL_TOL * (1.0 + st.g_norm());
        if !(st.residual <= tolerance) {
            return Err(Error::SolverInconsistency { residual: st.residual, tolerance });
        }
        Ok(EigenvectorSolution { g_s: st.g_s, g: st.g, residual: st.residual })
    }
}
