//! Monte Carlo statistics of the cut-off reciprocal fractional parts
//! `Y_k(zeta) = 1 / {h_k zeta}` if `{h_k zeta} > k^(-theta)`, else `0`,
//! with `zeta` uniform on `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub covariance: f64,
    pub stderr: f64,
    /// `9 j^theta (h_j / h_k) theta ln k`
    pub bound: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Uniform sample on `[0, 1)` carried as an unevaluated sum `hi + lo` with
/// about 106 random bits, so that `{h zeta}` stays uniform for large `h`.
fn sample_zeta(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let hi: f64 = rng.random();
    let lo: f64 = rng.random::<f64>() * f64::EPSILON / 2.0;
    (hi, lo)
}

/// `{h (hi + lo)}`, using the exact product error of `h * hi`.
fn frac_scaled(h: f64, (hi, lo): (f64, f64)) -> f64 {
    let p = h * hi;
    let e = h.mul_add(hi, -p);
    let x = (p - p.floor()) + e + h * lo;
    let f = x - x.floor();
    if f >= 1.0 { 0.0 } else { f }
}

fn cutoff_value(x: f64, k: usize, theta: f64) -> f64 {
    if x > (k as f64).powf(-theta) && x < 1.0 {
        1.0 / x
    } else {
        0.0
    }
}

fn validate(h: f64, k: usize, theta: f64, samples: usize) -> Result<()> {
    if !(h >= 1.0) || k == 0 || !(theta > 0.0 && theta < 0.5) || samples < 2 {
        return Err(Error::Precondition(format!(
            "need h >= 1, k >= 1, 0 < theta < 1/2, samples >= 2 (h = {h}, k = {k}, theta = {theta}, samples = {samples})"
        )));
    }
    Ok(())
}

/// Runs `f` over `samples` draws split into fixed chunks, each with its own
/// stream of a seeded generator, and sums the returned moment vectors in
/// chunk order.
fn chunked_sums<const M: usize>(
    samples: usize,
    seed: u64,
    f: impl Fn((f64, f64)) -> [f64; M] + Sync,
) -> [f64; M] {
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<[f64; M]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut acc = [0.0; M];
            for _ in 0..len {
                let v = f(sample_zeta(&mut rng));
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; M];
    for p in parts {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

pub fn cutoff_mean_estimate(h: f64, k: usize, theta: f64, samples: usize, seed: u64) -> Result<MeanEstimate> {
    validate(h, k, theta, samples)?;
    let [s1, s2, s4] = chunked_sums(samples, seed, |z| {
        let y = cutoff_value(frac_scaled(h, z), k, theta);
        let y2 = y * y;
        [y, y2, y2 * y2]
    });
    let n = samples as f64;
    let mean = s1 / n;
    let second = s2 / n;
    let var = (second - mean * mean).max(0.0) * n / (n - 1.0);
    let var2 = (s4 / n - second * second).max(0.0) * n / (n - 1.0);
    Ok(MeanEstimate {
        mean,
        stderr: (var / n).sqrt(),
        second_moment: second,
        second_moment_stderr: (var2 / n).sqrt(),
        samples,
        seed,
    })
}

/// Sample covariance of `Y_j` and `Y_k` (`j < k`) under a shared `zeta`.
pub fn cutoff_covariance_estimate(
    (h_j, j): (f64, usize),
    (h_k, k): (f64, usize),
    theta: f64,
    samples: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    validate(h_j, j, theta, samples)?;
    validate(h_k, k, theta, samples)?;
    if j >= k {
        return Err(Error::Precondition("covariance probe needs j < k".into()));
    }
    let [sy, sz, syz] = chunked_sums(samples, seed, |zeta| {
        let y = cutoff_value(frac_scaled(h_j, zeta), j, theta);
        let z = cutoff_value(frac_scaled(h_k, zeta), k, theta);
        [y, z, y * z]
    });
    let n = samples as f64;
    let (my, mz) = (sy / n, sz / n);
    let covariance = syz / n - my * mz;
    // standard error from a second pass over the centred products
    let [sc, sc2] = chunked_sums(samples, seed, |zeta| {
        let y = cutoff_value(frac_scaled(h_j, zeta), j, theta) - my;
        let z = cutoff_value(frac_scaled(h_k, zeta), k, theta) - mz;
        let c = y * z;
        [c, c * c]
    });
    let var = (sc2 / n - (sc / n).powi(2)).max(0.0) * n / (n - 1.0);
    Ok(CovarianceEstimate {
        covariance,
        stderr: (var / n).sqrt(),
        bound: covariance_bound((h_j, j), (h_k, k), theta),
        samples,
        seed,
    })
}

/// Deviation allowed between `E(Y_k)` and `theta ln k`.
pub fn cutoff_bias_bound(h: f64, k: usize, theta: f64) -> f64 {
    theta * (k as f64).ln() / h
}

pub fn covariance_bound((h_j, j): (f64, usize), (h_k, k): (f64, usize), theta: f64) -> f64 {
    9.0 * (j as f64).powf(theta) * (h_j / h_k) * theta * (k as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_has_zero_mean() {
        let e = cutoff_mean_estimate(2.0, 1, 0.3, 10_000, 1).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = cutoff_mean_estimate(1024.0, 10, 0.4, 20_000, 7).unwrap();
        let b = cutoff_mean_estimate(1024.0, 10, 0.4, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let c = cutoff_mean_estimate(1024.0, 10, 0.4, 20_000, 8).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn fractional_part_keeps_low_bits() {
        let h = 2f64.powi(40);
        let z = (0.5 + f64::EPSILON, 0.25 * f64::EPSILON);
        let f = frac_scaled(h, z);
        // h * hi contributes 2^40 * 2^-52 = 2^-12, h * lo contributes 2^-14
        assert!((f - (2f64.powi(-12) + 2f64.powi(-14))).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(cutoff_mean_estimate(0.5, 3, 0.3, 100, 0).is_err());
        assert!(cutoff_mean_estimate(2.0, 3, 0.6, 100, 0).is_err());
        assert!(cutoff_covariance_estimate((2.0, 4), (4.0, 3), 0.3, 100, 0).is_err());
    }
}
