//! Splitting `N` into the sparse index classes
//! `N(a) = { a + 2^(kappa(a) + k - 1) : k >= 1 }`, where `kappa(a)` is the
//! smallest integer with `a <= 2^kappa(a) - 1`.
//!
//! Along each class the indices roughly double, so a spectrum with power-law
//! multiplicative growth grows exponentially along the class.

use serde::{Deserialize, Serialize};

use super::{SpectrumModel, REL_TOL};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexClass {
    pub offset: usize,
    pub kappa: u32,
    /// Members `<= k_max`, increasing.
    pub members: Vec<usize>,
}

fn kappa(a: usize) -> u32 {
    // smallest kappa with a + 1 <= 2^kappa
    (a + 1).next_power_of_two().trailing_zeros()
}

impl IndexClass {
    pub fn new(offset: usize, k_max: usize) -> Self {
        let kappa = kappa(offset);
        let mut members = Vec::new();
        let mut step = 1usize << kappa;
        while offset + step <= k_max {
            members.push(offset + step);
            match step.checked_mul(2) {
                Some(s) => step = s,
                None => break,
            }
        }
        Self { offset, kappa, members }
    }

    /// Checks `E_{k_i'} / E_{k_i} >= C_M / (a+1)^mu * 2^(mu (i' - i))` for all
    /// member positions `i < i'`.
    pub fn exponential_growth_holds(&self, model: &SpectrumModel, c_m: f64, mu: f64) -> Result<bool> {
        let e: Vec<f64> = self.members.iter().map(|&k| model.energy(k)).collect::<Result<_>>()?;
        let c = c_m / ((self.offset + 1) as f64).powf(mu);
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                let bound = c * (mu * std::f64::consts::LN_2 * (j - i) as f64).exp();
                if e[j] / e[i] < bound * (1.0 - REL_TOL) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// The classes `N(a)` restricted to `{1, ..., k_max}`. Every index in that
/// range lies in exactly one returned class; classes with no member in range
/// are omitted.
pub fn decompose_spectrum(k_max: usize) -> Vec<IndexClass> {
    (0..=k_max / 2)
        .map(|a| IndexClass::new(a, k_max))
        .filter(|c| !c.members.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_classes() {
        assert_eq!(IndexClass::new(0, 16).members, vec![1, 2, 4, 8, 16]);
        assert_eq!(IndexClass::new(1, 17).members, vec![3, 5, 9, 17]);
        assert_eq!(kappa(0), 0);
        assert_eq!(kappa(1), 1);
        assert_eq!(kappa(3), 2);
        assert_eq!(kappa(4), 3);
    }

    #[test]
    fn classes_partition_the_range() {
        for k_max in [1usize, 2, 7, 64, 1000] {
            let mut seen = vec![0u32; k_max + 1];
            for c in decompose_spectrum(k_max) {
                for m in c.members {
                    seen[m] += 1;
                }
            }
            assert!(seen[1..].iter().all(|&s| s == 1), "k_max = {k_max}");
        }
        let small: Vec<_> = (0..=31).map(|a| IndexClass::new(a, 64)).collect();
        let mut seen = [0u32; 65];
        for c in &small {
            for &m in &c.members {
                seen[m] += 1;
            }
        }
        assert!(seen[1..].iter().all(|&s| s == 1));
    }

    #[test]
    fn power_growth_becomes_exponential_on_classes() {
        let q = SpectrumModel::quadratic().with_multiplicative(1.0, 2.0);
        for c in decompose_spectrum(4096) {
            assert!(c.exponential_growth_holds(&q, 1.0, 2.0).unwrap(), "a = {}", c.offset);
        }
    }
}
