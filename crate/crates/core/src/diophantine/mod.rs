//! Exponent selection, window estimates of the diophantine constant and the
//! translate-density constructions.

mod density;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{FloquetGrid, LatticeIndex, TruncationWindow};

pub use density::{density_witness, translate_density_scan, witness_threshold, DensityScan, Interval};

/// Exponents `(ell, tau, sigma)` with `tau (ell + 2) <= r alpha`,
/// `2 sigma + 2 < tau` and `ell < r alpha / 4 - 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub r: u32,
    pub alpha: f64,
    pub ell: u32,
    pub tau: f64,
    pub sigma: f64,
}

/// `ell` is the requested order or the largest integer below `r alpha / 4 - 2`;
/// then `tau = r alpha / (ell + 2)` and `sigma = 1 + (tau - 4) / 4`.
pub fn select_exponents(r: u32, alpha: f64, ell_requested: Option<u32>) -> Result<Exponents> {
    let infeasible = |reason: String| Error::InfeasibleExponents { r, alpha, reason };
    if r < 2 || !(alpha > 0.0) {
        return Err(infeasible("need r >= 2 and alpha > 0".into()));
    }
    let ra = r as f64 * alpha;
    if ra <= 16.0 {
        return Err(infeasible(format!("r alpha = {ra} must exceed 16")));
    }
    let cap = ra / 4.0 - 2.0;
    let ell = match ell_requested {
        Some(l) if l == 0 || l as f64 >= cap => {
            return Err(infeasible(format!("ell = {l} must satisfy 1 <= ell < {cap}")));
        }
        Some(l) => l,
        None => cap.ceil() as u32 - 1,
    };
    let tau = ra / (ell as f64 + 2.0);
    let sigma = 1.0 + (tau - 4.0) / 4.0;
    let ex = Exponents { r, alpha, ell, tau, sigma };
    if !(tau > 4.0 && sigma > 1.0 && 2.0 * sigma + 2.0 < tau && tau * (ell as f64 + 2.0) <= ra * (1.0 + 1e-15) && tau >= sigma) {
        return Err(infeasible(format!("selected exponents violate constraints: {ex:?}")));
    }
    Ok(ex)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineProfile {
    pub omega: f64,
    pub sigma: f64,
    pub tau: f64,
    /// Window estimate of the diophantine constant.
    pub gamma: f64,
    pub eta: LatticeIndex,
    pub ell: u32,
    pub r: u32,
    pub alpha: f64,
}

impl DiophantineProfile {
    pub fn new(grid: &FloquetGrid, exponents: Exponents, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            omega: grid.omega,
            sigma: exponents.sigma,
            tau: exponents.tau,
            gamma,
            eta: grid.eta,
            ell: exponents.ell,
            r: exponents.r,
            alpha: exponents.alpha,
        })
    }

    /// Profile with `gamma` estimated on `window`.
    pub fn estimate(grid: &FloquetGrid, exponents: Exponents, window: TruncationWindow) -> Result<Self> {
        let gamma = gamma_estimate(grid, exponents.sigma, window)?;
        Self::new(grid, exponents, gamma)
    }

    /// `psi(k) = gamma k^(-sigma)`
    pub fn psi(&self, k: usize) -> f64 {
        self.gamma * (k as f64).powf(-self.sigma)
    }

    /// `psi~(k) = (gamma / 2) k^(-tau)`
    pub fn psi_tilde(&self, k: usize) -> f64 {
        0.5 * self.gamma * (k as f64).powf(-self.tau)
    }
}

/// `min_{n in window, n != eta} n2^sigma |F_n - F|`.
pub fn gamma_estimate(grid: &FloquetGrid, sigma: f64, window: TruncationWindow) -> Result<f64> {
    window.require(grid.eta)?;
    let mut best = f64::INFINITY;
    for n in window.points() {
        if n == grid.eta {
            continue;
        }
        let d = grid.detuning(n)?;
        if d == 0.0 {
            return Err(Error::Resonance { index: n, gap: d });
        }
        best = best.min((n.n2 as f64).powf(sigma) * d.abs());
    }
    if !best.is_finite() {
        return Err(Error::Precondition("window holds no index besides eta".into()));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub window: TruncationWindow,
    /// `0` when the window contains an exact resonance.
    pub gamma_hat: f64,
    pub flagged: bool,
}

/// `gamma_estimate` along an increasing ladder of windows; a window is flagged
/// as suspect-resonant if it holds an exact resonance or the estimate drops by
/// more than a factor 10 from the previous window.
pub fn omega_stability_report(
    grid: &FloquetGrid,
    sigma: f64,
    ladder: &[TruncationWindow],
) -> Result<Vec<StabilityEntry>> {
    if ladder.windows(2).any(|w| !w[0].is_subset_of(&w[1]) || w[0] == w[1]) {
        return Err(Error::Precondition("window ladder must be strictly increasing".into()));
    }
    let mut out: Vec<StabilityEntry> = Vec::with_capacity(ladder.len());
    for &window in ladder {
        let gamma_hat = match gamma_estimate(grid, sigma, window) {
            Ok(g) => g,
            Err(Error::Resonance { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        let dropped = out.last().is_some_and(|p| p.gamma_hat > 0.0 && gamma_hat < p.gamma_hat / 10.0);
        out.push(StabilityEntry { window, gamma_hat, flagged: gamma_hat == 0.0 || dropped });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumModel;

    const PHI: f64 = 1.618_033_988_749_895;

    fn grid(omega: f64) -> FloquetGrid {
        FloquetGrid::new(SpectrumModel::quadratic(), omega, LatticeIndex::new(0, 1).unwrap()).unwrap()
    }

    #[test]
    fn exponent_rule_examples() {
        let e = select_exponents(20, 1.0, None).unwrap();
        assert_eq!((e.ell, e.tau, e.sigma), (2, 5.0, 1.25));
        assert!(2.0 * e.sigma + 2.0 < e.tau);
        assert_eq!(select_exponents(16, 1.0, None).unwrap_err().name(), "infeasible-exponent");
        let e = select_exponents(40, 1.0, Some(2)).unwrap();
        assert_eq!((e.tau, e.sigma), (10.0, 2.5));
        assert!(select_exponents(20, 1.0, Some(3)).is_err());
    }

    #[test]
    fn gamma_single_row() {
        let g = grid(PHI);
        let w = TruncationWindow::new(4, 1).unwrap();
        assert!((gamma_estimate(&g, 1.25, w).unwrap() - PHI).abs() < 1e-15);
    }

    #[test]
    fn gamma_detects_rational_resonance() {
        let g = grid(1.0);
        let w = TruncationWindow::new(5, 3).unwrap();
        assert_eq!(gamma_estimate(&g, 1.25, w).unwrap_err().name(), "resonance");
    }

    #[test]
    fn gamma_decreases_but_stays_positive() {
        let g = grid(PHI);
        let a = gamma_estimate(&g, 1.25, TruncationWindow::new(50, 50).unwrap()).unwrap();
        let b = gamma_estimate(&g, 1.25, TruncationWindow::new(100, 100).unwrap()).unwrap();
        assert!(b <= a && b > 0.0);
    }

    #[test]
    fn stability_ladder() {
        let ladder: Vec<_> = [(1, 1), (2, 2), (5, 5)].iter().map(|&(a, b)| TruncationWindow::new(a, b).unwrap()).collect();
        let rep = omega_stability_report(&grid(1.0), 1.25, &ladder).unwrap();
        // the first resonance (n2 = 2, n1 = -3) enters with the third window
        assert_eq!(rep.iter().map(|e| e.flagged).collect::<Vec<_>>(), vec![false, false, true]);
        let one = omega_stability_report(&grid(PHI), 1.25, &ladder[..1]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(!one[0].flagged);
    }

    #[test]
    fn psi_dominates_twice_psi_tilde() {
        let e = select_exponents(20, 1.0, None).unwrap();
        let p = DiophantineProfile::new(&grid(PHI), e, 0.3).unwrap();
        for k in 1..1000 {
            assert!(p.psi(k) >= 2.0 * p.psi_tilde(k));
        }
    }
}
