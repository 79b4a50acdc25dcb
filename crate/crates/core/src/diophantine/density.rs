//! Density of the translates `x + omega Z` hitting an interval `[u, v]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Precondition(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Smallest admissible `x` for one component `]a, b[` of the open set:
/// `max(0, v, (v b - u a) / (b - a))`.
pub fn witness_threshold(u: f64, v: f64, component: Interval) -> f64 {
    let Interval { lo: a, hi: b } = component;
    0f64.max(v).max((v * b - u * a) / (b - a))
}

/// Closed set `M(x)` of frequencies `omega` inside `open_set` for which some
/// translate `x - k omega`, `k` a positive integer, lands in `[u, v]`.
///
/// For each component `]a, b[` the set is the union of
/// `[(x - v)/k, (x - u)/k]` over integers `(x - u)/b < k < (x - v)/a`. The
/// result is sorted and pairwise disjoint.
pub fn density_witness(u: f64, v: f64, open_set: &[Interval], x: f64) -> Result<Vec<Interval>> {
    if !(v > u) {
        return Err(Error::Precondition(format!("need u < v, got [{u}, {v}]")));
    }
    let mut comps = open_set.to_vec();
    comps.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    for (i, c) in comps.iter().enumerate() {
        if !(c.lo < c.hi) || c.lo < v - u {
            return Err(Error::Precondition(format!(
                "component ]{}, {}[ must be non-empty and lie beyond v - u = {}",
                c.lo,
                c.hi,
                v - u
            )));
        }
        if i > 0 && comps[i - 1].hi > c.lo {
            return Err(Error::Precondition("open set components overlap".into()));
        }
    }
    let mut out = Vec::new();
    for c in &comps {
        let threshold = witness_threshold(u, v, *c);
        if !(x > threshold) {
            return Err(Error::WitnessUnavailable { x, threshold });
        }
        let k_lo = ((x - u) / c.hi).floor() as i64 + 1;
        let k_hi = ((x - v) / c.lo).ceil() as i64 - 1;
        for k in (k_lo.max(1)..=k_hi).rev() {
            let kf = k as f64;
            let iv = Interval { lo: (x - v) / kf, hi: (x - u) / kf };
            // guard the open-interval bounds against rounding at the ends
            if iv.lo > c.lo && iv.hi < c.hi {
                out.push(iv);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScan {
    pub fraction: f64,
    pub hits: usize,
    pub samples: usize,
    pub seed: u64,
}

fn translates_hit(energies: &[f64], omega: f64, u: f64, v: f64) -> bool {
    energies.iter().any(|&e| {
        let j = ((u - e) / omega).ceil();
        let y = j.mul_add(omega, e);
        (u..=v).contains(&y) || (u..=v).contains(&(y - omega))
    })
}

/// Fraction of `omega` drawn uniformly from `omega_range` for which some
/// `omega j + E_k`, `j` an integer and `k <= k_max`, lies in `[u, v]`.
pub fn translate_density_scan(
    model: &SpectrumModel,
    (u, v): (f64, f64),
    omega_range: (f64, f64),
    k_max: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityScan> {
    if !(v > u) || !(omega_range.0 > 0.0 && omega_range.1 > omega_range.0) || k_max == 0 || samples == 0 {
        return Err(Error::Precondition("invalid translate scan parameters".into()));
    }
    let energies = model.energies(k_max)?;
    if energies.iter().copied().fold(f64::NEG_INFINITY, f64::max) < v {
        return Err(Error::Precondition(format!("probed energies stay below v = {v}")));
    }
    const CHUNK: usize = 256;
    let chunks = samples.div_ceil(CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len)
                .filter(|_| {
                    let omega = rng.random_range(omega_range.0..omega_range.1);
                    translates_hit(&energies, omega, u, v)
                })
                .count()
        })
        .sum();
    Ok(DensityScan { fraction: hits as f64 / samples as f64, hits, samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_example() {
        let u_set = [Interval::new(1.0, 2.0).unwrap()];
        let m = density_witness(0.0, 0.5, &u_set, 100.0).unwrap();
        // 50 < k < 99.5
        assert_eq!(m.len(), 49);
        for iv in &m {
            for omega in [iv.lo, 0.5 * (iv.lo + iv.hi), iv.hi] {
                let k0 = ((100.0 - 0.5) / omega).floor() as i64;
                let hit = (k0 - 1..=k0 + 2).any(|k| {
                    let y = 100.0 - k as f64 * omega;
                    (-1e-12..=0.5 + 1e-12).contains(&y)
                });
                assert!(hit, "omega = {omega}");
            }
        }
        for w in m.windows(2) {
            assert!(w[0].hi < w[1].lo);
        }
    }

    #[test]
    fn witness_measure_approaches_the_log() {
        let u_set = [Interval::new(1.0, 2.0).unwrap()];
        let m = density_witness(0.0, 0.5, &u_set, 1e6).unwrap();
        let total: f64 = m.iter().map(Interval::len).sum();
        assert!(total >= 0.125 * 2f64.ln());
        assert!((total - 0.5 * 2f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn witness_edge_cases() {
        assert!(density_witness(0.0, 0.5, &[], 10.0).unwrap().is_empty());
        let u_set = [Interval::new(1.0, 2.0).unwrap()];
        assert_eq!(density_witness(0.0, 0.5, &u_set, 0.4).unwrap_err().name(), "witness-unavailable");
    }

    #[test]
    fn wide_interval_always_hit() {
        let q = SpectrumModel::quadratic();
        let s = translate_density_scan(&q, (0.0, 2.5), (1.0, 2.0), 3, 500, 3).unwrap();
        assert_eq!(s.fraction, 1.0);
    }

    #[test]
    fn single_energy_matches_closed_form() {
        // E_1 = 1: a hit needs omega j in [-0.7, -0.6], i.e. omega in [0.6/j, 0.7/j]
        let q = SpectrumModel::quadratic();
        let (lo, hi) = (0.1, 1.0);
        let exact: f64 = (1..20)
            .map(|j| {
                let (a, b) = (0.6 / j as f64, 0.7 / j as f64);
                (b.min(hi) - a.max(lo)).max(0.0)
            })
            .sum::<f64>()
            / (hi - lo);
        let n = 40_000;
        let s = translate_density_scan(&q, (0.3, 0.4), (lo, hi), 1, n, 11).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((s.fraction - exact).abs() < 4.0 * se, "{} vs {exact}", s.fraction);
    }
}
