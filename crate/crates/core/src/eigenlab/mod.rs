//! Verification against finite sections of `K + beta V`: dense eigenpairs,
//! order fits against the Rayleigh-Schrodinger partial sums, the implicit
//! eigenvalue equation, domain-density scans and the sublevel-set lemmas.

mod implicit;
mod measure;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Complex64, ZERO};
use crate::perturbation::{FourierPerturbation, MatrixSlice};
use crate::rs_series::RSExpansion;
use crate::spectrum::{FloquetGrid, TruncationWindow};

pub use implicit::{
    domain_scan, eigen_check, fixed_point_lambda, solve_implicit, DomainScan, FixedPoint, ImplicitSolution,
    FIXED_POINT_MAX_STEPS, FIXED_POINT_TOL,
};
pub use measure::{measure_bound_check, sublevel_measure, MeasureKind, MeasureReport, TestFunction};

/// Overlap below which an eigenvector is not considered inherited from `f`.
pub const TRACKING_THRESHOLD: f64 = 0.5;

/// Finite section of `K + beta V - F` on a window.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub grid: FloquetGrid,
    pub beta: f64,
    pub window: TruncationWindow,
    /// `beta V` on the window.
    pub coupling: CMat,
    /// `K + beta V - F`; the diagonal holds `F_n - F + beta V_nn`.
    pub shifted: CMat,
    pub eta_index: usize,
    /// `F = F_eta`.
    pub reference: f64,
}

impl TruncatedOperator {
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `K + beta V` itself.
    pub fn matrix(&self) -> CMat {
        let f = self.reference;
        CMat::from_fn(self.len(), self.len(), |i, j| if i == j { self.shifted[(i, j)] + f } else { self.shifted[(i, j)] })
    }
}

pub fn assemble(grid: &FloquetGrid, v: &FourierPerturbation, beta: f64, window: TruncationWindow) -> Result<TruncatedOperator> {
    let eta_index = window.require(grid.eta)?;
    let detunings = grid.detunings(&window)?;
    let vm = MatrixSlice::build(v, window)?.entries;
    let n = window.len();
    let coupling = CMat::from_fn(n, n, |i, j| vm[(i, j)] * beta);
    let shifted = CMat::from_fn(n, n, |i, j| if i == j { coupling[(i, j)] + detunings[i] } else { coupling[(i, j)] });
    Ok(TruncatedOperator {
        grid: grid.clone(),
        beta,
        window,
        coupling,
        shifted,
        eta_index,
        reference: grid.reference_value()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub beta: f64,
    /// `F(beta) - F`, read off the `eta` row of the eigen-equation as
    /// `(beta V x)_eta / x_eta`.
    pub detuning: f64,
    pub f_beta_value: f64,
    /// Eigenvector scaled to `<f, f_beta> = 1`.
    pub f_beta: Vec<Complex64>,
    /// `|<f, x>|` for the unit eigenvector before rescaling.
    pub overlap: f64,
    /// Distance to the nearest other eigenvalue.
    pub nearest_gap: f64,
}

/// Picks the eigenvector with the largest `eta` component.
pub fn eigenpair_track(op: &TruncatedOperator) -> Result<EigenResult> {
    let (values, vectors) = linalg::hermitian_eigen(&op.shifted)?;
    let e = op.eta_index;
    let best = (0..values.len())
        .max_by(|&a, &b| vectors[(e, a)].norm().total_cmp(&vectors[(e, b)].norm()))
        .expect("non-empty window");
    let overlap = vectors[(e, best)].norm();
    if overlap < TRACKING_THRESHOLD {
        return Err(Error::AmbiguousTracking { overlap });
    }
    let scale = vectors[(e, best)].inv();
    let f_beta: Vec<Complex64> = (0..values.len()).map(|i| vectors[(i, best)] * scale).collect();
    // eta row: (F_eta - F) x_eta + (beta V x)_eta = mu x_eta with F_eta - F = 0
    let detuning = {
        let mut s = ZERO;
        for (j, x) in f_beta.iter().enumerate() {
            s += op.coupling[(e, j)] * x;
        }
        s.re
    };
    let mu = values[best];
    let nearest_gap = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, v)| (v - mu).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(EigenResult {
        beta: op.beta,
        detuning,
        f_beta_value: op.reference + detuning,
        f_beta,
        overlap,
        nearest_gap,
    })
}

/// `F(beta) - F` along a grid of couplings.
pub fn eigen_sweep(
    grid: &FloquetGrid,
    v: &FourierPerturbation,
    betas: &[f64],
    window: TruncationWindow,
) -> Vec<Result<EigenResult>> {
    betas.par_iter().map(|&b| assemble(grid, v, b, window).and_then(|op| eigenpair_track(&op))).collect()
}

/// `+-[lo, hi]` with `per_sign` logarithmically spaced magnitudes per sign.
pub fn symmetric_log_grid(lo: f64, hi: f64, per_sign: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_sign >= 2);
    let step = (hi / lo).ln() / (per_sign - 1) as f64;
    let mags: Vec<f64> = (0..per_sign).map(|i| lo * (step * i as f64).exp()).collect();
    mags.iter().rev().map(|m| -m).chain(mags.iter().copied()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: usize,
    /// Least-squares slope of `ln |remainder|` against `ln |beta|`.
    pub slope: f64,
    pub intercept: f64,
    /// RMS deviation of `ln |remainder|` from the fitted line.
    pub scatter: f64,
    pub remainders: Vec<(f64, f64)>,
}

/// Fits `|F(beta) - F - beta V_{eta eta} - sum_{j <= order} beta^j lambda_j|` against `|beta|`.
pub fn asymptotic_fit(results: &[EigenResult], expansion: &RSExpansion, order: usize) -> Result<OrderFit> {
    if order > expansion.ell {
        return Err(Error::Precondition(format!("order {order} exceeds expansion order {}", expansion.ell)));
    }
    if results.len() < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let partial = RSExpansion { lambdas: expansion.lambdas[..order].to_vec(), ..expansion.clone() };
    let remainders: Vec<(f64, f64)> = results
        .iter()
        .map(|r| (r.beta, (r.detuning - r.beta * expansion.shift - partial.lambda_sum(r.beta)).abs()))
        .collect();
    if remainders.iter().all(|&(_, x)| x == 0.0) {
        return Err(Error::BelowFloatingPointFloor);
    }
    if remainders.iter().any(|&(b, x)| x == 0.0 || b == 0.0) {
        return Err(Error::Precondition("zero coupling or exact remainder in a log fit".into()));
    }
    let pts: Vec<(f64, f64)> = remainders.iter().map(|&(b, x)| (b.abs().ln(), x.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("coupling grid has a single magnitude".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let scatter = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(OrderFit { order, slope, intercept, scatter, remainders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{LatticeIndex, SpectrumModel};

    const PHI: f64 = 1.618_033_988_749_895;

    fn grid() -> FloquetGrid {
        FloquetGrid::new(SpectrumModel::quadratic(), PHI, LatticeIndex::new(0, 1).unwrap()).unwrap()
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let w = TruncationWindow::new(2, 3).unwrap();
        let v = FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.3).unwrap();
        let op = assemble(&grid(), &v, 0.0, w).unwrap();
        let m = op.matrix();
        for (i, n) in w.points().enumerate() {
            assert_eq!(m[(i, i)].re, grid().floquet_value(n).unwrap());
        }
        let r = eigenpair_track(&op).unwrap();
        assert_eq!((r.detuning, r.overlap), (0.0, 1.0));
        assert!(r.f_beta.iter().enumerate().all(|(i, z)| *z == if i == op.eta_index { Complex64::new(1.0, 0.0) } else { ZERO }));
    }

    #[test]
    fn two_level_closed_form() {
        // levels 1 and 2 coupled by c at k = 0: E = (1, 4), the n1 = +-1 copies sit 100 away
        let model = SpectrumModel::table(vec![1.0, 4.0], 1.0, 1.0);
        let g = FloquetGrid::new(model, 100.0, LatticeIndex::new(0, 1).unwrap()).unwrap();
        let c = 0.7;
        let v = FourierPerturbation::table([((0, 1, 2), Complex64::new(c, 0.0))]).unwrap();
        let w = TruncationWindow::new(1, 2).unwrap();
        for beta in [0.1, -0.5, 1.3] {
            let r = eigenpair_track(&assemble(&g, &v, beta, w).unwrap()).unwrap();
            let exact = 1.5 - (2.25 + beta * beta * c * c).sqrt();
            assert!((r.detuning - exact).abs() < 1e-14, "{} vs {exact}", r.detuning);
            assert!((r.nearest_gap - 2.0 * (2.25 + beta * beta * c * c).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn near_degeneracy_is_ambiguous() {
        // f at the end of a chain of ten nearly degenerate levels spreads over all chain modes
        let model = SpectrumModel::table((0..10).map(|k| 1.0 + 1e-9 * k as f64).collect(), 1.0, 1e-9);
        let g = FloquetGrid::new(model, 100.0, LatticeIndex::new(0, 1).unwrap()).unwrap();
        let v = FourierPerturbation::table((1..10).map(|p| ((0, p, p + 1), Complex64::new(1.0, 0.0)))).unwrap();
        let op = assemble(&g, &v, 0.1, TruncationWindow::new(1, 10).unwrap()).unwrap();
        assert_eq!(eigenpair_track(&op).unwrap_err().name(), "ambiguous-tracking");
    }

    #[test]
    fn trace_and_shift_covariance() {
        let w = TruncationWindow::new(3, 4).unwrap();
        let v = FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.25).unwrap().with_phase(0.2);
        let op = assemble(&grid(), &v, 0.3, w).unwrap();
        let (vals, _) = linalg::hermitian_eigen(&op.shifted).unwrap();
        let tr: f64 = (0..w.len()).map(|i| op.shifted[(i, i)].re).sum();
        assert!((vals.iter().sum::<f64>() - tr).abs() <= 1e-9 * tr.abs().max(1.0));
        let shifted = assemble(&grid(), &v.shifted(0.25), 0.3, w).unwrap();
        let (vals2, _) = linalg::hermitian_eigen(&shifted.shifted).unwrap();
        for (a, b) in vals.iter().zip(&vals2) {
            assert!((a - 0.3 * 0.25 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_grid_is_symmetric() {
        let g = symmetric_log_grid(1e-4, 1e-2, 8);
        assert_eq!(g.len(), 16);
        assert!((g[8] - 1e-4).abs() < 1e-18 && (g[15] - 1e-2).abs() < 1e-15);
        assert!(g.iter().take(8).zip(g.iter().rev()).all(|(a, b)| *a == -*b));
    }
}
