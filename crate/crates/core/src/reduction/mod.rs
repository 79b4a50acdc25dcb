//! Reduction of the eigenvalue problem onto the critical indices.
//!
//! Indices `n != eta` are split into critical ones (`F_n - F` within half a
//! frequency of zero, at most one per level) and regular ones. The regular
//! part is eliminated exactly, leaving an effective operator `W(beta, lambda)`
//! on the critical indices whose diagonal carries the small denominators.

pub mod bounds;
mod constants;
mod state;

use serde::{Deserialize, Serialize};

use crate::diophantine::DiophantineProfile;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::perturbation::{FourierPerturbation, MatrixSlice};
use crate::spectrum::{FloquetGrid, LatticeIndex, TruncationWindow, REL_TOL};

pub use constants::{c_g, lemma71_fit, zeta, Lemma71Fit};
pub use state::{v_n, w_n, DomainVariant, EigenvectorSolution, ReducedState, VnValue};

/// Critical indices of a window, ordered by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub window: TruncationWindow,
    pub members: Vec<LatticeIndex>,
    /// `F_n - F` for each member.
    pub detunings: Vec<f64>,
    /// Critical indices of the window's levels whose `n1` falls outside the
    /// window, with their detunings.
    pub outside: Vec<(LatticeIndex, f64)>,
}

impl CriticalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Half-open critical band `]-omega/2, omega/2]`.
fn is_critical(d: f64, omega: f64) -> bool {
    d > -0.5 * omega && d <= 0.5 * omega
}

/// The critical index of level `n2 != eta2`, wherever its `n1` lies.
fn critical_of_level(grid: &FloquetGrid, n2: usize) -> Result<(LatticeIndex, f64)> {
    let de = grid.model.energy(n2)? - grid.model.energy(grid.eta.n2)?;
    let w = grid.omega;
    let mut j = ((-de - 0.5 * w) / w).floor() as i64 + 1;
    let mut d = w * j as f64 + de;
    // absorb rounding at the band edges
    while d <= -0.5 * w {
        j += 1;
        d = w * j as f64 + de;
    }
    while d > 0.5 * w {
        j -= 1;
        d = w * j as f64 + de;
    }
    Ok((LatticeIndex { n1: grid.eta.n1 + j, n2 }, d))
}

/// Scans every window level for indices with `F_n - F` in `]-omega/2, omega/2]`.
pub fn critical_set(grid: &FloquetGrid, window: TruncationWindow) -> Result<CriticalSet> {
    window.require(grid.eta)?;
    let mut members = Vec::new();
    let mut detunings = Vec::new();
    let mut outside = Vec::new();
    for n2 in 1..=window.n2_max as usize {
        let mut found = Vec::new();
        for n1 in -(window.n1_max as i64)..=window.n1_max as i64 {
            let n = LatticeIndex { n1, n2 };
            if n == grid.eta {
                continue;
            }
            let d = grid.detuning(n)?;
            if is_critical(d, grid.omega) {
                found.push((n, d));
            }
        }
        if found.len() > 1 || (n2 == grid.eta.n2 && !found.is_empty()) {
            return Err(Error::CriticalSetCorrupt { n2, count: found.len() });
        }
        match found.pop() {
            Some((n, d)) => {
                members.push(n);
                detunings.push(d);
            }
            None if n2 != grid.eta.n2 => outside.push(critical_of_level(grid, n2)?),
            None => {}
        }
    }
    Ok(CriticalSet { window, members, detunings, outside })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub pairs_checked: usize,
    /// Smallest `lhs - rhs` among critical pairs.
    pub worst_pair_slack: Option<f64>,
    /// Smallest `lhs - rhs` between critical indices and `eta`.
    pub worst_eta_slack: Option<f64>,
}

/// Verifies, for critical `m != n`,
/// `1 + |m1 - n1| >= C_E / (omega (1 + alpha)) max(m2, n2)^alpha |m2 - n2|`
/// and the strict version between each critical `m` and `eta`.
pub fn distance_checks(grid: &FloquetGrid, set: &CriticalSet) -> Result<DistanceReport> {
    let model = &grid.model;
    let c = model.gap_constant / (grid.omega * (1.0 + model.alpha));
    let rhs = |m: LatticeIndex, n: LatticeIndex| {
        c * (m.n2.max(n.n2) as f64).powf(model.alpha) * m.n2.abs_diff(n.n2) as f64
    };
    let lhs = |m: LatticeIndex, n: LatticeIndex| 1.0 + (m.n1 - n.n1).unsigned_abs() as f64;
    let mut report = DistanceReport { pairs_checked: 0, worst_pair_slack: None, worst_eta_slack: None };
    for (i, &m) in set.members.iter().enumerate() {
        for &n in &set.members[i + 1..] {
            let (l, r) = (lhs(m, n), rhs(m, n));
            if l < r * (1.0 - REL_TOL) {
                return Err(Error::InequalityViolation { name: "critical-pair-distance", lhs: l, rhs: r });
            }
            report.pairs_checked += 1;
            report.worst_pair_slack = Some(report.worst_pair_slack.map_or(l - r, |s: f64| s.min(l - r)));
        }
        let (l, r) = (lhs(m, grid.eta), rhs(m, grid.eta));
        if l <= r {
            return Err(Error::InequalityViolation { name: "critical-eta-distance", lhs: l, rhs: r });
        }
        report.worst_eta_slack = Some(report.worst_eta_slack.map_or(l - r, |s: f64| s.min(l - r)));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorBounds {
    /// `max_S |F_n - F|`, at most `omega / 2`.
    pub norm_ks: f64,
    /// `1 / min_R |F_n - F|`, at most `2 / omega`.
    pub norm_g0pr: f64,
}

/// Exact norms of the diagonal operators `(K - F) P_S` and `Gamma_0 P_R` on the window.
pub fn projector_bounds(grid: &FloquetGrid, set: &CriticalSet) -> Result<ProjectorBounds> {
    let window = set.window;
    let norm_ks = set.detunings.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let mut min_reg = f64::INFINITY;
    for n in window.points() {
        if n == grid.eta {
            continue;
        }
        let d = grid.detuning(n)?;
        if d == 0.0 {
            return Err(Error::Resonance { index: n, gap: d });
        }
        if !is_critical(d, grid.omega) {
            min_reg = min_reg.min(d.abs());
        }
    }
    let norm_g0pr = if min_reg.is_finite() { 1.0 / min_reg } else { 0.0 };
    if norm_ks > 0.5 * grid.omega {
        return Err(Error::InequalityViolation { name: "critical-projector", lhs: norm_ks, rhs: 0.5 * grid.omega });
    }
    if norm_g0pr > 2.0 / grid.omega * (1.0 + REL_TOL) {
        return Err(Error::InequalityViolation { name: "regular-resolvent", lhs: norm_g0pr, rhs: 2.0 / grid.omega });
    }
    Ok(ProjectorBounds { norm_ks, norm_g0pr })
}

/// Role of a window index in the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRole {
    Eta,
    /// Position in the critical set.
    Critical(usize),
    Regular,
}

/// Everything about a (grid, perturbation, window) that does not depend on
/// `(beta, lambda)`.
#[derive(Debug, Clone)]
pub struct ReductionContext {
    pub grid: FloquetGrid,
    /// Perturbation with `V_{eta eta}` removed.
    pub perturbation: FourierPerturbation,
    /// The removed value `V_{eta eta}`; eigenvalues of `K + beta V` are
    /// `F + beta * shift + lambda`.
    pub shift: f64,
    pub profile: DiophantineProfile,
    pub window: TruncationWindow,
    pub matrix: MatrixSlice,
    /// Window Schur surrogate of `||V||` (after the shift).
    pub v_norm: f64,
    pub detunings: Vec<f64>,
    pub roles: Vec<IndexRole>,
    pub eta_index: usize,
    pub critical: CriticalSet,
    /// Window positions of the critical members.
    pub critical_indices: Vec<usize>,
    /// `C_g(r)` from window surrogates of `||ad_D^j V||`; `None` if `V` is
    /// not smooth to order `r`.
    pub c_g: Option<f64>,
    /// `|V(k, n2, n2)|^2`, `k = 1..=k_sum`, per critical member.
    diagonal_harmonics: Vec<Vec<f64>>,
    /// Whether `diagonal_harmonics` is exact (finite band) or needs a tail bound.
    harmonics_complete: bool,
}

/// Harmonics summed explicitly in `v_n` when the band is unbounded.
pub const DEFAULT_HARMONICS: usize = 4096;

impl ReductionContext {
    pub fn new(
        grid: &FloquetGrid,
        perturbation: &FourierPerturbation,
        profile: &DiophantineProfile,
        window: TruncationWindow,
    ) -> Result<Self> {
        let eta_index = window.require(grid.eta)?;
        let (v, shift) = perturbation.eta_normalized(grid.eta)?;
        let matrix = MatrixSlice::build(&v, window)?;
        let v_norm = matrix.schur_norm();
        let detunings = grid.detunings(&window)?;
        for (i, &d) in detunings.iter().enumerate() {
            if i != eta_index && d == 0.0 {
                return Err(Error::Resonance { index: window.point(i), gap: d });
            }
        }
        let critical = critical_set(grid, window)?;
        let critical_indices: Vec<usize> =
            critical.members.iter().map(|&m| window.index_of(m).expect("member in window")).collect();
        let mut roles = vec![IndexRole::Regular; window.len()];
        roles[eta_index] = IndexRole::Eta;
        for (pos, &i) in critical_indices.iter().enumerate() {
            roles[i] = IndexRole::Critical(pos);
        }
        let (k_sum, harmonics_complete) = match v.band_limit {
            Some(b) => (b as usize, true),
            None => (DEFAULT_HARMONICS, false),
        };
        let diagonal_harmonics = critical
            .members
            .iter()
            .map(|m| (1..=k_sum as i64).map(|k| Ok(v.coeff(k, m.n2, m.n2)?.norm_sqr())).collect())
            .collect::<Result<_>>()?;
        let c_g = match crate::perturbation::ad_schur_norms(&v, window, profile.r) {
            Ok(ad) => Some(c_g(profile, grid, &ad)),
            Err(Error::Smoothness { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            grid: grid.clone(),
            perturbation: v,
            shift,
            profile: profile.clone(),
            window,
            matrix,
            v_norm,
            detunings,
            roles,
            eta_index,
            critical,
            critical_indices,
            c_g,
            diagonal_harmonics,
            harmonics_complete,
        })
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|beta| <= omega / (12 ||V||)`; unbounded for `V = 0`.
    pub fn beta_bound(&self) -> f64 {
        if self.v_norm == 0.0 {
            f64::INFINITY
        } else {
            self.grid.omega / (12.0 * self.v_norm)
        }
    }

    pub fn lambda_bound(&self) -> f64 {
        self.grid.omega / 3.0
    }

    fn check_box(&self, beta: f64, lambda: f64) -> Result<()> {
        if !(beta.abs() <= self.beta_bound()) {
            return Err(Error::Domain {
                beta,
                lambda,
                reason: format!("|beta| exceeds omega / (12 ||V||) = {:e}", self.beta_bound()),
            });
        }
        if !(lambda.abs() <= self.lambda_bound()) {
            return Err(Error::Domain { beta, lambda, reason: "|lambda| exceeds omega / 3".into() });
        }
        Ok(())
    }

    /// `Gamma_lambda P_R` as a diagonal over the window.
    fn regular_resolvent(&self, lambda: f64) -> Vec<f64> {
        self.roles
            .iter()
            .zip(&self.detunings)
            .map(|(role, d)| if *role == IndexRole::Regular { 1.0 / (d - lambda) } else { 0.0 })
            .collect()
    }

    /// Columns `cols` of `W = (1 + beta V Gamma_lambda P_R)^(-1) V`.
    pub fn w_columns(&self, beta: f64, lambda: f64, cols: &[usize]) -> Result<CMat> {
        self.check_box(beta, lambda)?;
        self.w_columns_unchecked(beta, lambda, cols)
    }

    fn w_columns_unchecked(&self, beta: f64, lambda: f64, cols: &[usize]) -> Result<CMat> {
        let n = self.len();
        let v = &self.matrix.entries;
        let rhs = CMat::from_fn(n, cols.len(), |i, j| v[(i, cols[j])]);
        if beta == 0.0 {
            return Ok(rhs);
        }
        let gamma = self.regular_resolvent(lambda);
        let a = CMat::from_fn(n, n, |i, j| {
            let x = v[(i, j)] * (beta * gamma[j]);
            if i == j { x + 1.0 } else { x }
        });
        let x = crate::linalg::lu_solve(&a, &rhs);
        let resid = crate::linalg::max_abs_diff(&(&a * &x), &rhs);
        let scale = self.v_norm.max(f64::MIN_POSITIVE);
        if !(resid <= 1e-9 * scale) {
            return Err(Error::Conditioning { residual: resid / scale });
        }
        Ok(x)
    }

    /// The full `W(beta, lambda)` on the window, with the bound
    /// `||W|| <= 2 ||V||` asserted.
    pub fn w_slice(&self, beta: f64, lambda: f64) -> Result<MatrixSlice> {
        let cols: Vec<usize> = (0..self.len()).collect();
        let w = self.w_columns(beta, lambda, &cols)?;
        let norm = crate::linalg::schur_norm(&w);
        if norm > 2.0 * self.v_norm * (1.0 + 1e-12) {
            return Err(Error::InequalityViolation { name: "reduced-operator-norm", lhs: norm, rhs: 2.0 * self.v_norm });
        }
        Ok(MatrixSlice { window: self.window, entries: w })
    }
}
