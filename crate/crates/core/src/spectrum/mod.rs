//! Unperturbed spectrum `E_k`, the Floquet lattice and the spectral
//! growth conditions.
//!
//! Quasi-energies are `F_n = omega * n1 + E_{n2}`. The gap condition
//! `(E_{k+1} - E_k) / (k+1)^alpha >= C_E` controls how the critical indices
//! spread out in the lattice; the multiplicative conditions are the
//! alternative hypotheses used for the strongly continuous counterexample.

mod decompose;
mod lattice;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use decompose::{decompose_spectrum, IndexClass};
pub use lattice::{LatticeIndex, TruncationWindow};

/// Relative tolerance for equality cases in spectral inequalities.
pub const REL_TOL: f64 = 1e-12;

/// How the energies `E_k`, `k >= 1`, are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnergyLaw {
    /// `E_k = scale * k^exponent`
    Power { exponent: f64, scale: f64 },
    /// `E_k = scale * base^k`
    Geometric { base: f64, scale: f64 },
    /// Explicit finite table, `values[k - 1] = E_k`.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub law: EnergyLaw,
    /// Gap exponent `alpha`.
    pub alpha: f64,
    /// Gap constant `C_E`.
    pub gap_constant: f64,
    /// Multiplicative constant `C_M`.
    pub mult_constant: Option<f64>,
    /// Multiplicative exponent `mu`.
    pub mult_exponent: Option<f64>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplicativeVariant {
    /// `E_k / E_j >= C_M (k/j)^mu`
    Power,
    /// `E_k / E_j >= C_M exp(mu (k - j))`
    Exponential,
}

impl SpectrumModel {
    /// `E_k = k^p` with the given gap constants.
    pub fn power(exponent: f64, alpha: f64, gap_constant: f64) -> Self {
        Self {
            law: EnergyLaw::Power { exponent, scale: 1.0 },
            alpha,
            gap_constant,
            mult_constant: None,
            mult_exponent: None,
            label: format!("k^{exponent}"),
        }
    }

    /// The reference spectrum `E_k = k^2`, which satisfies the gap condition
    /// with `alpha = 1`, `C_E = 1.5`.
    pub fn quadratic() -> Self {
        Self::power(2.0, 1.0, 1.5)
    }

    pub fn geometric(base: f64, alpha: f64, gap_constant: f64) -> Self {
        Self {
            law: EnergyLaw::Geometric { base, scale: 1.0 },
            alpha,
            gap_constant,
            mult_constant: None,
            mult_exponent: None,
            label: format!("{base}^k"),
        }
    }

    pub fn table(values: Vec<f64>, alpha: f64, gap_constant: f64) -> Self {
        Self {
            law: EnergyLaw::Table(values),
            alpha,
            gap_constant,
            mult_constant: None,
            mult_exponent: None,
            label: "table".into(),
        }
    }

    pub fn with_multiplicative(mut self, mult_constant: f64, mult_exponent: f64) -> Self {
        self.mult_constant = Some(mult_constant);
        self.mult_exponent = Some(mult_exponent);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest `k` for which `E_k` is defined.
    pub fn max_index(&self) -> Option<usize> {
        match &self.law {
            EnergyLaw::Table(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn energy(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::ModelRange { k, len: self.max_index().unwrap_or(usize::MAX) });
        }
        match &self.law {
            EnergyLaw::Power { exponent, scale } => {
                let e = if exponent.fract() == 0.0 && exponent.abs() < 64.0 {
                    (k as f64).powi(*exponent as i32)
                } else {
                    (k as f64).powf(*exponent)
                };
                Ok(scale * e)
            }
            EnergyLaw::Geometric { base, scale } => Ok(scale * base.powi(k as i32)),
            EnergyLaw::Table(v) => v
                .get(k - 1)
                .copied()
                .ok_or(Error::ModelRange { k, len: v.len() }),
        }
    }

    /// `E_1, ..., E_k_max`.
    pub fn energies(&self, k_max: usize) -> Result<Vec<f64>> {
        (1..=k_max).map(|k| self.energy(k)).collect()
    }

    pub fn is_strictly_increasing(&self, k_max: usize) -> Result<bool> {
        let e = self.energies(k_max)?;
        Ok(e.windows(2).all(|w| w[1] > w[0]))
    }

    /// `min_{1 <= k <= k_max} (E_{k+1} - E_k) / (k+1)^alpha`.
    ///
    /// The model satisfies the gap condition on the probed range iff the
    /// result is at least `gap_constant`. Needs `E_{k_max + 1}`.
    pub fn gap_check(&self, k_max: usize) -> Result<f64> {
        if k_max < 2 {
            return Err(Error::Precondition("gap_check needs k_max >= 2".into()));
        }
        let mut min = f64::INFINITY;
        let mut prev = self.energy(1)?;
        for k in 1..=k_max {
            let next = self.energy(k + 1)?;
            min = min.min((next - prev) / ((k + 1) as f64).powf(self.alpha));
            prev = next;
        }
        Ok(min)
    }

    /// `|E_j - E_k| >= C_E / (1 + alpha) |j - k| max(j^alpha, k^alpha)`.
    pub fn pairwise_gap_bound(&self, j: usize, k: usize) -> Result<bool> {
        if j == k {
            return Err(Error::Precondition("pairwise_gap_bound needs j != k".into()));
        }
        let lhs = (self.energy(j)? - self.energy(k)?).abs();
        let rhs = self.gap_constant / (1.0 + self.alpha)
            * j.abs_diff(k) as f64
            * (j.max(k) as f64).powf(self.alpha);
        Ok(lhs >= rhs * (1.0 - REL_TOL))
    }

    /// Checks the multiplicative growth condition for all `j < k <= k_max`.
    pub fn multiplicative_check(&self, variant: MultiplicativeVariant, k_max: usize) -> Result<bool> {
        let (c_m, mu) = match (self.mult_constant, self.mult_exponent) {
            (Some(c), Some(m)) => (c, m),
            _ => {
                return Err(Error::Precondition(
                    "multiplicative_check needs C_M and mu on the model".into(),
                ))
            }
        };
        let e = self.energies(k_max)?;
        for k in 2..=k_max {
            for j in 1..k {
                let ratio = e[k - 1] / e[j - 1];
                let bound = match variant {
                    MultiplicativeVariant::Power => c_m * (k as f64 / j as f64).powf(mu),
                    MultiplicativeVariant::Exponential => c_m * (mu * (k - j) as f64).exp(),
                };
                if ratio < bound * (1.0 - REL_TOL) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// The unperturbed Floquet operator: a spectrum model, a frequency and the
/// distinguished index `eta` whose quasi-energy `F = F_eta` is followed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetGrid {
    pub model: SpectrumModel,
    pub omega: f64,
    pub eta: LatticeIndex,
}

impl FloquetGrid {
    pub fn new(model: SpectrumModel, omega: f64, eta: LatticeIndex) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Precondition(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { model, omega, eta })
    }

    /// `F_n = omega * n1 + E_{n2}`.
    pub fn floquet_value(&self, n: LatticeIndex) -> Result<f64> {
        Ok(self.omega * n.n1 as f64 + self.model.energy(n.n2)?)
    }

    /// `F = F_eta`.
    pub fn reference_value(&self) -> Result<f64> {
        self.floquet_value(self.eta)
    }

    /// `F_n - F` computed as `omega (n1 - eta1) + (E_{n2} - E_{eta2})`, which
    /// is exact whenever the energy differences are.
    pub fn detuning(&self, n: LatticeIndex) -> Result<f64> {
        let de = self.model.energy(n.n2)? - self.model.energy(self.eta.n2)?;
        Ok(self.omega * (n.n1 - self.eta.n1) as f64 + de)
    }

    /// `F_n - F` for every point of the window, in window order.
    pub fn detunings(&self, window: &TruncationWindow) -> Result<Vec<f64>> {
        window.points().map(|n| self.detuning(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n1: i64, n2: usize) -> LatticeIndex {
        LatticeIndex::new(n1, n2).unwrap()
    }

    #[test]
    fn floquet_value_examples() {
        let g = FloquetGrid::new(SpectrumModel::quadratic(), 1.0, idx(0, 1)).unwrap();
        assert_eq!(g.floquet_value(idx(0, 1)).unwrap(), 1.0);
        let g = FloquetGrid::new(SpectrumModel::quadratic(), 0.7, idx(0, 1)).unwrap();
        assert!((g.floquet_value(idx(2, 3)).unwrap() - 10.4).abs() < 1e-12);
        let g = FloquetGrid::new(SpectrumModel::quadratic(), 1.234, idx(-3, 5)).unwrap();
        assert_eq!(g.floquet_value(g.eta).unwrap(), g.reference_value().unwrap());
        assert_eq!(g.detuning(g.eta).unwrap(), 0.0);
    }

    #[test]
    fn floquet_value_is_affine_in_n1() {
        let g = FloquetGrid::new(SpectrumModel::quadratic(), 0.37, idx(0, 1)).unwrap();
        for n2 in 1..6 {
            for n1 in -5..5 {
                let a = g.floquet_value(idx(n1, n2)).unwrap();
                let b = g.floquet_value(idx(n1 + 1, n2)).unwrap();
                assert!((b - a - 0.37).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_range_error() {
        let m = SpectrumModel::table(vec![1.0, 4.0, 9.0], 1.0, 1.5);
        assert_eq!(m.energy(4), Err(Error::ModelRange { k: 4, len: 3 }));
        assert!(m.energy(0).is_err());
        assert!(FloquetGrid::new(m, 0.0, idx(0, 1)).is_err());
    }

    #[test]
    fn gap_check_examples() {
        let q = SpectrumModel::quadratic();
        assert!((q.gap_check(100).unwrap() - 1.5).abs() < 1e-15);
        let lin = SpectrumModel::power(1.0, 1.0, 1.0);
        assert!((lin.gap_check(100).unwrap() - 1.0 / 101.0).abs() < 1e-15);
        let t = SpectrumModel::table(vec![1.0, 4.0, 9.0], 1.0, 1.5);
        assert_eq!(t.gap_check(2).unwrap(), 1.5);
        assert!(t.gap_check(1).is_err());
        assert!(q.is_strictly_increasing(50).unwrap());
    }

    #[test]
    fn pairwise_gap_examples() {
        let q = SpectrumModel::quadratic();
        assert!(q.pairwise_gap_bound(1, 2).unwrap());
        assert!(q.pairwise_gap_bound(3, 3).is_err());
        for j in 1..=200 {
            for k in 1..=200 {
                if j != k {
                    assert!(q.pairwise_gap_bound(j, k).unwrap(), "({j},{k})");
                }
            }
        }
    }

    #[test]
    fn multiplicative_examples() {
        let q = SpectrumModel::quadratic().with_multiplicative(1.0, 2.0);
        assert!(q.multiplicative_check(MultiplicativeVariant::Power, 100).unwrap());
        let q = SpectrumModel::quadratic().with_multiplicative(1.0, 1.0);
        assert!(!q.multiplicative_check(MultiplicativeVariant::Exponential, 50).unwrap());
        let g = SpectrumModel::geometric(2.0, 1.0, 1.0).with_multiplicative(1.0, 2f64.ln());
        assert!(g.multiplicative_check(MultiplicativeVariant::Exponential, 60).unwrap());
        assert!(SpectrumModel::quadratic()
            .multiplicative_check(MultiplicativeVariant::Power, 10)
            .is_err());
    }
}
