//! Time-periodic perturbations `V(omega t)` given by their Fourier
//! coefficients `V(k, p, q)`, with lattice matrix entries
//! `V_mn = V(n1 - m1, m2, n2)`.

mod counterexample;
mod cutoff;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, Complex64, ZERO};
use crate::spectrum::{LatticeIndex, TruncationWindow};

pub use counterexample::{
    counterexample_perturbation, divergence_partial_sum, divergence_partial_sums,
    fractional_quotient, resonance_order, xi_log_squared, Counterexample, XiSequence,
    RESONANCE_FLOOR,
};
pub use cutoff::{
    covariance_bound, cutoff_bias_bound, cutoff_covariance_estimate, cutoff_mean_estimate,
    CovarianceEstimate, MeanEstimate,
};

pub type CoefficientFn = dyn Fn(i64, usize, usize) -> Complex64 + Send + Sync;

/// Source of the Fourier coefficients.
#[derive(Clone)]
pub enum Coefficients {
    Zero,
    /// `V(k, p, q) = amplitudes[|k|] (1 + |p - q|)^(-decay) e^(i phase sgn k)`
    /// for `|k| < amplitudes.len()`, except `V(0, p, p) = diagonal`.
    /// With `pair_reach = Some(d)` couplings with `|p - q| > d` vanish.
    Band {
        amplitudes: Vec<f64>,
        decay: f64,
        phase: f64,
        diagonal: f64,
        pair_reach: Option<usize>,
    },
    Counterexample(Counterexample),
    /// Explicit entries, completed hermitically; missing keys are zero.
    Table(Arc<HashMap<(i64, usize, usize), Complex64>>),
    Custom(Arc<CoefficientFn>),
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Zero => write!(f, "Zero"),
            Coefficients::Band { amplitudes, decay, phase, diagonal, pair_reach } => f
                .debug_struct("Band")
                .field("amplitudes", amplitudes)
                .field("decay", decay)
                .field("phase", phase)
                .field("diagonal", diagonal)
                .field("pair_reach", pair_reach)
                .finish(),
            Coefficients::Counterexample(c) => f.debug_tuple("Counterexample").field(c).finish(),
            Coefficients::Table(t) => write!(f, "Table({} entries)", t.len()),
            Coefficients::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FourierPerturbation {
    pub coefficients: Coefficients,
    /// Number of bounded commutators `ad_D^j V`, `j <= smoothness`.
    pub smoothness: u32,
    /// `V(k, ., .) = 0` for `|k|` beyond this.
    pub band_limit: Option<u32>,
    pub label: String,
    /// Constant subtracted from every `V(0, p, p)`.
    pub shift: f64,
}

impl FourierPerturbation {
    pub fn zero() -> Self {
        Self {
            coefficients: Coefficients::Zero,
            smoothness: u32::MAX,
            band_limit: Some(0),
            label: "zero".into(),
            shift: 0.0,
        }
    }

    /// Band profile; a finite band is smooth to every order.
    pub fn band(amplitudes: Vec<f64>, decay: f64, diagonal: f64) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Precondition("band amplitudes must be finite and non-empty".into()));
        }
        let reach = amplitudes.len() as u32 - 1;
        Ok(Self {
            coefficients: Coefficients::Band { amplitudes, decay, phase: 0.0, diagonal, pair_reach: None },
            smoothness: u32::MAX,
            band_limit: Some(reach),
            label: format!("band-{reach}"),
            shift: 0.0,
        })
    }

    /// Sets the phase of the `k > 0` band coefficients (conjugated for `k < 0`).
    pub fn with_phase(mut self, phase: f64) -> Self {
        if let Coefficients::Band { phase: p, .. } = &mut self.coefficients {
            *p = phase;
        }
        self
    }

    pub fn with_pair_reach(mut self, reach: usize) -> Self {
        if let Coefficients::Band { pair_reach, .. } = &mut self.coefficients {
            *pair_reach = Some(reach);
        }
        self
    }

    /// Builds a perturbation from explicit entries. Each `(k, p, q) -> v` also
    /// defines `(-k, q, p) -> conj(v)`; contradictory pairs are rejected.
    pub fn table(entries: impl IntoIterator<Item = ((i64, usize, usize), Complex64)>) -> Result<Self> {
        let mut map: HashMap<(i64, usize, usize), Complex64> = HashMap::new();
        let mut band = 0u32;
        for ((k, p, q), v) in entries {
            if p == 0 || q == 0 {
                return Err(Error::InvalidTable(format!("index ({k}, {p}, {q}) has a zero level")));
            }
            for (key, val) in [((k, p, q), v), ((-k, q, p), v.conj())] {
                if let Some(old) = map.get(&key) {
                    if (*old - val).norm() > 1e-15 * (1.0 + val.norm()) {
                        return Err(Error::InvalidTable(format!(
                            "entries ({k}, {p}, {q}) are not hermitian"
                        )));
                    }
                }
                map.insert(key, val);
            }
            band = band.max(k.unsigned_abs() as u32);
        }
        Ok(Self {
            coefficients: Coefficients::Table(Arc::new(map)),
            smoothness: u32::MAX,
            band_limit: Some(band),
            label: "table".into(),
            shift: 0.0,
        })
    }

    /// Arbitrary coefficient function; the caller vouches for hermiticity.
    pub fn custom(f: Arc<CoefficientFn>, smoothness: u32, band_limit: Option<u32>) -> Self {
        Self {
            coefficients: Coefficients::Custom(f),
            smoothness,
            band_limit,
            label: "custom".into(),
            shift: 0.0,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_smoothness(mut self, smoothness: u32) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// Copy with an extra constant removed from the time-averaged diagonal.
    pub fn shifted(&self, by: f64) -> Self {
        let mut out = self.clone();
        out.shift += by;
        out
    }

    /// Copy with `V_{eta eta} = 0`, together with the removed value.
    pub fn eta_normalized(&self, eta: LatticeIndex) -> Result<(Self, f64)> {
        let d = self.coeff(0, eta.n2, eta.n2)?;
        if d.im.abs() > 1e-14 * (1.0 + d.re.abs()) {
            return Err(Error::Hermiticity { imag: d.im });
        }
        Ok((self.shifted(d.re), d.re))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.coefficients, Coefficients::Zero) && self.shift == 0.0
    }

    /// `V(k, p, q)` including the diagonal shift.
    pub fn coeff(&self, k: i64, p: usize, q: usize) -> Result<Complex64> {
        if p == 0 || q == 0 {
            return Err(Error::Precondition(format!("coefficient level index 0 in ({k}, {p}, {q})")));
        }
        let raw = match &self.coefficients {
            Coefficients::Zero => ZERO,
            Coefficients::Band { amplitudes, decay, phase, diagonal, pair_reach } => {
                let ak = k.unsigned_abs() as usize;
                let gap = p.abs_diff(q);
                if ak >= amplitudes.len() || pair_reach.is_some_and(|d| gap > d) {
                    ZERO
                } else if k == 0 && p == q {
                    Complex64::new(*diagonal, 0.0)
                } else {
                    let mag = amplitudes[ak] * (1.0 + gap as f64).powf(-decay);
                    let c = if k == 0 || *phase == 0.0 {
                        Complex64::new(mag, 0.0)
                    } else {
                        Complex64::from_polar(mag, *phase)
                    };
                    if k < 0 { c.conj() } else { c }
                }
            }
            Coefficients::Counterexample(c) => c.coeff(k, p, q)?,
            Coefficients::Table(t) => t.get(&(k, p, q)).copied().unwrap_or(ZERO),
            Coefficients::Custom(f) => f(k, p, q),
        };
        if k == 0 && p == q && self.shift != 0.0 {
            Ok(raw - self.shift)
        } else {
            Ok(raw)
        }
    }

    /// `V_mn = V(n1 - m1, m2, n2)`.
    pub fn matrix_entry(&self, m: LatticeIndex, n: LatticeIndex) -> Result<Complex64> {
        if self.band_limit.is_some_and(|b| (n.n1 - m.n1).unsigned_abs() > b as u64) {
            return Ok(ZERO);
        }
        self.coeff(n.n1 - m.n1, m.n2, n.n2)
    }

    /// `(ad_D^j V)_mn = (m1 - n1)^j V_mn`.
    pub fn ad_power_entry(&self, j: u32, m: LatticeIndex, n: LatticeIndex) -> Result<Complex64> {
        self.check_order(j)?;
        let v = self.matrix_entry(m, n)?;
        Ok(v * ((m.n1 - n.n1) as f64).powi(j as i32))
    }

    fn check_order(&self, j: u32) -> Result<()> {
        if j > self.smoothness {
            return Err(Error::Smoothness { order: j, smoothness: self.smoothness });
        }
        Ok(())
    }

    /// Largest `|V(k,p,q) - conj V(-k,q,p)|` over `|k| <= k_max`, `p, q <= level_max`.
    pub fn hermiticity_defect(&self, k_max: i64, level_max: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in -k_max..=k_max {
            for p in 1..=level_max {
                for q in 1..=level_max {
                    let d = self.coeff(k, p, q)? - self.coeff(-k, q, p)?.conj();
                    worst = worst.max(d.norm());
                }
            }
        }
        Ok(worst)
    }
}

/// Dense section of an operator on a window, rows and columns in window order.
#[derive(Debug, Clone)]
pub struct MatrixSlice {
    pub window: TruncationWindow,
    pub entries: CMat,
}

impl MatrixSlice {
    pub fn build(v: &FourierPerturbation, window: TruncationWindow) -> Result<Self> {
        let n = window.len();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let nj = window.point(j);
                (0..n).map(|i| v.matrix_entry(window.point(i), nj)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let entries = CMat::from_fn(n, n, |i, j| cols[j][i]);
        Ok(Self { window, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, m: LatticeIndex, n: LatticeIndex) -> Option<Complex64> {
        Some(self.entries[(self.window.index_of(m)?, self.window.index_of(n)?)])
    }

    /// `(ad_D^j X)` on the same window.
    pub fn ad_power(&self, j: u32) -> CMat {
        let w = self.window;
        CMat::from_fn(self.len(), self.len(), |a, b| {
            let d = (w.point(a).n1 - w.point(b).n1) as f64;
            self.entries[(a, b)] * d.powi(j as i32)
        })
    }

    pub fn schur_norm(&self) -> f64 {
        crate::linalg::schur_norm(&self.entries)
    }
}

/// Schur surrogates of `ad_D^j V` on the window for `j = 0..=r`, sharing
/// coefficient evaluations between orders.
pub fn ad_schur_norms(v: &FourierPerturbation, window: TruncationWindow, r: u32) -> Result<Vec<f64>> {
    v.check_order(r)?;
    let n = window.len();
    let terms = r as usize + 1;
    // line sums over the second index for fixed first index (rows) or the reverse (columns)
    let line_sums = |rows: bool| -> Result<Vec<f64>> {
        let sums: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let pa = window.point(a);
                let mut acc = vec![0.0; terms];
                for b in 0..n {
                    let pb = window.point(b);
                    let x = if rows { v.matrix_entry(pa, pb)? } else { v.matrix_entry(pb, pa)? }.norm();
                    if x == 0.0 {
                        continue;
                    }
                    let d = (pa.n1 - pb.n1).unsigned_abs() as f64;
                    let mut y = x;
                    for t in acc.iter_mut() {
                        *t += y;
                        y *= d;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok((0..terms).map(|t| sums.iter().map(|s| s[t]).fold(0.0, f64::max)).collect())
    };
    let rows = line_sums(true)?;
    let cols = line_sums(false)?;
    Ok(rows.into_iter().zip(cols).map(|(a, b)| a.max(b)).collect())
}

/// Schur surrogate of `ad_D^j V` on the window.
pub fn schur_norm(v: &FourierPerturbation, window: TruncationWindow, j: u32) -> Result<f64> {
    v.check_order(j)?;
    let n = window.len();
    let mut rows = vec![0.0f64; n];
    let mut col_max = 0.0f64;
    for b in 0..n {
        let nb = window.point(b);
        let mut col = 0.0;
        for (a, row) in rows.iter_mut().enumerate() {
            let x = v.ad_power_entry(j, window.point(a), nb)?.norm();
            col += x;
            *row += x;
        }
        col_max = col_max.max(col);
    }
    Ok(rows.into_iter().fold(col_max, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub r: u32,
    pub norm: f64,
    pub ad_norm: f64,
    /// `max(||V||, 2^r ||ad_D^r V||)`
    pub constant: f64,
    /// Largest `|V_mn| (1 + |m1 - n1|)^r / constant` over the window.
    pub worst_ratio: f64,
    pub worst_pair: Option<(LatticeIndex, LatticeIndex)>,
    pub violations: usize,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Entrywise check of `|V_mn| <= max(||V||, 2^r ||ad_D^r V||) (1 + |m1 - n1|)^(-r)`
/// with window Schur surrogates for the norms.
pub fn decay_check(v: &FourierPerturbation, window: TruncationWindow, r: u32) -> Result<DecayReport> {
    let norms = ad_schur_norms(v, window, r)?;
    let (norm, ad_norm) = (norms[0], norms[r as usize]);
    let constant = norm.max(2f64.powi(r as i32) * ad_norm);
    let mut report = DecayReport {
        r,
        norm,
        ad_norm,
        constant,
        worst_ratio: 0.0,
        worst_pair: None,
        violations: 0,
    };
    for m in window.points() {
        for n in window.points() {
            let x = v.matrix_entry(m, n)?.norm();
            if x == 0.0 {
                continue;
            }
            let weight = (1.0 + (m.n1 - n.n1).unsigned_abs() as f64).powi(r as i32);
            let ratio = if constant > 0.0 { x * weight / constant } else { f64::INFINITY };
            if ratio > 1.0 + 1e-12 {
                report.violations += 1;
            }
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_pair = Some((m, n));
            }
        }
    }
    Ok(report)
}
