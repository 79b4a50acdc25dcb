//! A Hilbert-Schmidt, merely strongly continuous perturbation whose
//! first-order correction to `F` diverges, together with the partial sums
//! exhibiting that divergence.

use std::sync::Arc;

use super::{Coefficients, FourierPerturbation};
use crate::error::{Error, Result};
use crate::linalg::{Complex64, ZERO};
use crate::spectrum::SpectrumModel;

/// Fractional parts below this are treated as exact resonances.
pub const RESONANCE_FLOOR: f64 = 1e-15;

/// `xi_k = 1 / (k ln^2(k + 1))`.
pub fn xi_log_squared(k: usize) -> f64 {
    let l = ((k + 1) as f64).ln();
    1.0 / (k as f64 * l * l)
}

#[derive(Debug, Clone, PartialEq)]
pub enum XiSequence {
    LogSquared,
    Table(Arc<Vec<f64>>),
}

impl XiSequence {
    pub fn value(&self, k: usize) -> Result<f64> {
        match self {
            XiSequence::LogSquared if k >= 1 => Ok(xi_log_squared(k)),
            XiSequence::LogSquared => Err(Error::ModelRange { k, len: usize::MAX }),
            XiSequence::Table(v) => k
                .checked_sub(1)
                .and_then(|i| v.get(i))
                .copied()
                .ok_or(Error::ModelRange { k, len: v.len() }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub model: SpectrumModel,
    pub omega: f64,
    pub xi: XiSequence,
}

impl Counterexample {
    /// Each level pair `(p, q)` is coupled only through the harmonics
    /// `k = +-[|E_p - E_q| / omega]`, with amplitude `sqrt(xi_p xi_q)`; when
    /// that integer part vanishes the single `k = 0` coefficient is doubled.
    pub fn coeff(&self, k: i64, p: usize, q: usize) -> Result<Complex64> {
        let order = resonance_order(&self.model, self.omega, p, q)?;
        let amp = (self.xi.value(p)? * self.xi.value(q)?).sqrt();
        Ok(if order == 0 {
            if k == 0 { Complex64::new(2.0 * amp, 0.0) } else { ZERO }
        } else if k.abs() == order {
            Complex64::new(amp, 0.0)
        } else {
            ZERO
        })
    }
}

/// `[|E_p - E_q| / omega]`.
pub fn resonance_order(model: &SpectrumModel, omega: f64, p: usize, q: usize) -> Result<i64> {
    let d = (model.energy(p)? - model.energy(q)?).abs();
    let (n, _) = split_quotient(d, omega);
    Ok(n as i64)
}

pub fn counterexample_perturbation(model: &SpectrumModel, omega: f64, xi: XiSequence) -> Result<FourierPerturbation> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Precondition(format!("omega must be positive, got {omega}")));
    }
    if let XiSequence::Table(v) = &xi {
        if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Precondition("xi must be positive".into()));
        }
    }
    Ok(FourierPerturbation {
        coefficients: Coefficients::Counterexample(Counterexample { model: model.clone(), omega, xi }),
        smoothness: 0,
        band_limit: None,
        label: "counterexample".into(),
        shift: 0.0,
    })
}

/// Integer part and remainder of `d / omega` for `d >= 0`, with the remainder
/// recovered through a fused multiply-add so that it stays accurate when
/// the quotient is large.
fn split_quotient(d: f64, omega: f64) -> (f64, f64) {
    let mut n = (d / omega).floor();
    let mut r = (-n).mul_add(omega, d);
    while r < 0.0 {
        n -= 1.0;
        r += omega;
    }
    while r >= omega {
        n += 1.0;
        r -= omega;
    }
    (n, r)
}

/// Fractional part of `d / omega`, `d >= 0`.
pub fn fractional_quotient(d: f64, omega: f64) -> f64 {
    let (_, r) = split_quotient(d, omega);
    r / omega
}

/// Partial sums of `sum_{k = eta2+1}^{N} xi_k / frac((E_k - E_eta2) / omega)`
/// at each checkpoint `N` (increasing).
pub fn divergence_partial_sums(
    model: &SpectrumModel,
    omega: f64,
    eta2: usize,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    if !(omega > 0.0) || eta2 == 0 {
        return Err(Error::Precondition("need omega > 0 and eta2 >= 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.first().is_some_and(|&n| n <= eta2) {
        return Err(Error::Precondition("checkpoints must increase and exceed eta2".into()));
    }
    let e_eta = model.energy(eta2)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut k = eta2;
    for &n in checkpoints {
        while k < n {
            k += 1;
            let frac = fractional_quotient(model.energy(k)? - e_eta, omega);
            if frac < RESONANCE_FLOOR {
                return Err(Error::ResonantTerm { k, frac });
            }
            sum += xi_log_squared(k) / frac;
        }
        out.push(sum);
    }
    Ok(out)
}

pub fn divergence_partial_sum(model: &SpectrumModel, omega: f64, eta2: usize, n: usize) -> Result<f64> {
    Ok(divergence_partial_sums(model, omega, eta2, &[n])?[0])
}
