//! Sublevel sets `{|h| < eps}` of convex (or concave) functions with a lower
//! bound on `|h''|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bracket width at which root bisection stops.
const BISECTION_TOL: f64 = 1e-12;
/// Slack granted to a measured length against its bound.
const MEASURE_SLACK: f64 = 1e-9;

/// `h(x) = sign [(A/2)(x - x0)^2 + s + kappa ln cosh(x - x1)]`, so that
/// `|h''| >= A` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub curvature: f64,
    pub x0: f64,
    pub offset: f64,
    pub kappa: f64,
    pub x1: f64,
    pub sign: f64,
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl TestFunction {
    pub fn quadratic(curvature: f64, offset: f64) -> Self {
        Self { curvature, x0: 0.0, offset, kappa: 0.0, x1: 0.0, sign: 1.0 }
    }

    /// The convex representative `sign * h`.
    fn convex(&self, x: f64) -> f64 {
        0.5 * self.curvature * (x - self.x0).powi(2) + self.offset + self.kappa * ln_cosh(x - self.x1)
    }

    fn convex_slope(&self, x: f64) -> f64 {
        self.curvature * (x - self.x0) + self.kappa * (x - self.x1).tanh()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.sign * self.convex(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.sign * self.convex_slope(x)
    }

    fn minimizer(&self) -> f64 {
        let reach = self.kappa / self.curvature + 1.0;
        bisect(|x| self.convex_slope(x), self.x0 - reach, self.x0 + reach)
    }

    /// Points `lo < hi` where the convex representative crosses `level`,
    /// or `None` when it stays above.
    fn crossing(&self, level: f64, xmin: f64) -> Option<(f64, f64)> {
        if self.convex(xmin) >= level {
            return None;
        }
        let g = |x: f64| self.convex(x) - level;
        let mut step = 1.0;
        while g(xmin + step) < 0.0 {
            step *= 2.0;
        }
        let hi = bisect(g, xmin, xmin + step);
        let mut step = 1.0;
        while g(xmin - step) < 0.0 {
            step *= 2.0;
        }
        let lo = bisect(|x| -g(x), xmin - step, xmin);
        Some((lo, hi))
    }
}

/// Root of an increasing function inside `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECTION_TOL * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Length of `{x in [lo, hi] : |h(x)| < eps}`; pass infinite bounds for the full line.
pub fn sublevel_measure(h: &TestFunction, eps: f64, (lo, hi): (f64, f64)) -> f64 {
    let xmin = h.minimizer();
    let clip = |a: f64, b: f64| (b.min(hi) - a.max(lo)).max(0.0);
    // |h| < eps iff -eps < convex < eps
    match h.crossing(eps, xmin) {
        None => 0.0,
        Some((a, b)) => match h.crossing(-eps, xmin) {
            None => clip(a, b),
            Some((c, d)) => clip(a, c) + clip(d, b),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// `|{|h| < eps}| <= 4 sqrt(eps / a)`
    Lemma73,
    /// `|{x in [-delta, delta] : |h| < eps}| <= 8 delta (b / c) sqrt(eps / a)`
    Lemma74,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub kind: MeasureKind,
    pub trials: usize,
    pub violations: usize,
    /// Largest measured / bound.
    pub worst_ratio: f64,
    pub seed: u64,
}

fn random_function(rng: &mut ChaCha8Rng) -> TestFunction {
    TestFunction {
        curvature: 10f64.powf(rng.random_range(-1.0..1.0)),
        x0: rng.random_range(-2.0..2.0),
        offset: rng.random_range(-2.0..2.0),
        kappa: rng.random_range(0.0..3.0),
        x1: rng.random_range(-2.0..2.0),
        sign: if rng.random::<bool>() { 1.0 } else { -1.0 },
    }
}

/// Checks the chosen sublevel lemma on `trials` random test functions.
pub fn measure_bound_check(kind: MeasureKind, trials: usize, seed: u64) -> Result<MeasureReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MeasureReport { kind, trials, violations: 0, worst_ratio: 0.0, seed };
    for _ in 0..trials {
        let h = random_function(&mut rng);
        let a = h.curvature;
        let (measured, bound) = match kind {
            MeasureKind::Lemma73 => {
                let eps = 10f64.powf(rng.random_range(-4.0..0.5));
                (sublevel_measure(&h, eps, (f64::NEG_INFINITY, f64::INFINITY)), 4.0 * (eps / a).sqrt())
            }
            MeasureKind::Lemma74 => {
                let c = h.value(0.0).abs();
                let b = h.slope(0.0).abs() * rng.random_range(1.0..2.0) + 1e-3;
                let eps = rng.random_range(0.01..1.0) * (b * b / a).min(c / 2.0);
                let delta = 10f64.powf(rng.random_range(-2.0..0.5));
                if !(eps > 0.0) {
                    continue;
                }
                (sublevel_measure(&h, eps, (-delta, delta)), 8.0 * delta * (b / c) * (eps / a).sqrt())
            }
        };
        if !measured.is_finite() || !bound.is_finite() {
            return Err(Error::Precondition("non-finite sublevel measurement".into()));
        }
        let ratio = if bound > 0.0 { measured / bound } else if measured > 0.0 { f64::INFINITY } else { 0.0 };
        report.worst_ratio = report.worst_ratio.max(ratio);
        if measured > bound + MEASURE_SLACK {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

    #[test]
    fn parabola_examples() {
        // x^2 has A = 2
        let h = TestFunction::quadratic(2.0, 0.0);
        assert!((sublevel_measure(&h, 1.0, FULL) - 2.0).abs() < 1e-10);
        assert!(2.0 <= 4.0 * (0.5f64).sqrt());
        let lifted = TestFunction::quadratic(2.0, 10.0);
        assert_eq!(sublevel_measure(&lifted, 1.0, FULL), 0.0);
        // x^2 - 4 on |.| < 1: two intervals sqrt(3)..sqrt(5) on each side
        let dipped = TestFunction::quadratic(2.0, -4.0);
        let expect = 2.0 * (5f64.sqrt() - 3f64.sqrt());
        assert!((sublevel_measure(&dipped, 1.0, FULL) - expect).abs() < 1e-10);
        assert!((sublevel_measure(&dipped, 1.0, (0.0, 10.0)) - expect / 2.0).abs() < 1e-10);
    }

    #[test]
    fn lemmas_hold_on_random_instances() {
        for kind in [MeasureKind::Lemma73, MeasureKind::Lemma74] {
            let r = measure_bound_check(kind, 200, 5).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
            assert!(r.worst_ratio > 0.0);
        }
    }

    #[test]
    fn stable_log_cosh() {
        assert!((ln_cosh(0.3) - 0.3f64.cosh().ln()).abs() < 1e-15);
        assert!((ln_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
    }
}
