use serde::{Deserialize, Serialize};

use super::{IndexRole, ReductionContext};
use crate::diophantine::DiophantineProfile;
use crate::error::{Error, Result};
use crate::spectrum::{FloquetGrid, LatticeIndex};

/// `B_{2j} / (2j)!` for `j = 1..=7`.
const BERNOULLI_SCALED: [f64; 7] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
];

/// Riemann zeta for real `s > 1`: sixteen explicit terms followed by an
/// Euler-Maclaurin correction, accurate to a few ulps.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    const N: f64 = 16.0;
    let head: f64 = (1..16).rev().map(|k| (k as f64).powf(-s)).sum();
    let mut tail = N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    let mut rising = s;
    let mut power = N.powf(-s - 1.0);
    for (j, b) in BERNOULLI_SCALED.iter().enumerate() {
        tail += b * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= N * N;
    }
    head + tail
}

/// `C_g(r) = (1/gamma) 32 zeta(r) r! (8 omega (1 + alpha) / C_E)^r max_{j <= r} ||ad_D^j V||`
/// with `ad_norms[j] = ||ad_D^j V||`.
pub fn c_g(profile: &DiophantineProfile, grid: &FloquetGrid, ad_norms: &[f64]) -> f64 {
    let r = profile.r as usize;
    assert!(r >= 2 && ad_norms.len() > r, "need ad-norms up to order r = {r}");
    let m = ad_norms[..=r].iter().fold(0.0f64, |a, &b| a.max(b));
    if m == 0.0 {
        return 0.0;
    }
    let model = &grid.model;
    let ratio = 8.0 * grid.omega * (1.0 + model.alpha) / model.gap_constant;
    let log = (32.0 * zeta(r as f64)).ln() + ln_factorial(r) + r as f64 * ratio.ln() + m.ln() - profile.gamma.ln();
    log.exp()
}

fn ln_factorial(r: usize) -> f64 {
    (2..=r).map(|k| (k as f64).ln()).sum()
}

/// Scan of `|(V Gamma_lambda P_R V)_nn + 2 (F_n - F - lambda) v_n(lambda)|`
/// over the window's critical members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma71Fit {
    /// `max n2^alpha |combination|`.
    pub c_d: f64,
    pub worst: Option<LatticeIndex>,
    pub worst_lambda: f64,
    /// `max_lambda n2^alpha |combination|` per critical member.
    pub scaled: Vec<(LatticeIndex, f64)>,
    /// Largest same-level residue, which cancels against `2 x v_n` analytically.
    pub cancellation_residue: f64,
}

/// Fits `C_D` over `lambdas`. Same-level terms are summed over all
/// harmonics used by `v_n`; the cross-level part of `V Gamma_lambda P_R V`
/// is taken from the window.
pub fn lemma71_fit(ctx: &ReductionContext, lambdas: &[f64]) -> Result<Lemma71Fit> {
    if lambdas.iter().any(|l| !(l.abs() <= ctx.lambda_bound())) {
        return Err(Error::Precondition("lambda samples must satisfy |lambda| <= omega / 3".into()));
    }
    let v = &ctx.matrix.entries;
    let omega = ctx.grid.omega;
    let alpha = ctx.grid.model.alpha;
    let mut fit = Lemma71Fit {
        c_d: 0.0,
        worst: None,
        worst_lambda: 0.0,
        scaled: Vec::with_capacity(ctx.critical_indices.len()),
        cancellation_residue: 0.0,
    };
    for (pos, &i) in ctx.critical_indices.iter().enumerate() {
        let n = ctx.critical.members[pos];
        let weight = (n.n2 as f64).powf(alpha);
        let mut best = 0.0f64;
        for &lambda in lambdas {
            let x = ctx.detunings[i] - lambda;
            let cross: f64 = (0..ctx.len())
                .filter(|&j| ctx.roles[j] == IndexRole::Regular && ctx.window.point(j).n2 != n.n2)
                .map(|j| v[(i, j)].norm_sqr() / (ctx.detunings[j] - lambda))
                .sum();
            let harmonics = &ctx.diagonal_harmonics[pos];
            let same: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let wk = omega * (k + 1) as f64;
                    a * (1.0 / (x + wk) + 1.0 / (x - wk))
                })
                .sum();
            let vn = super::state::vn_from_harmonics(omega, x, harmonics, ctx.harmonics_complete, ctx.v_norm);
            let residue = same + 2.0 * x * vn.value;
            fit.cancellation_residue = fit.cancellation_residue.max(residue.abs());
            let scaled = weight * (cross + residue).abs();
            if scaled > fit.c_d {
                fit.c_d = scaled;
                fit.worst = Some(n);
                fit.worst_lambda = lambda;
            }
            best = best.max(scaled);
        }
        fit.scaled.push((n, best));
    }
    Ok(fit)
}
