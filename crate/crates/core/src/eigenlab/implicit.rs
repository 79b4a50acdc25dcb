use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Complex64};
use crate::reduction::ReductionContext;
use crate::rs_series::SeriesProblem;

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_STEPS: usize = 100;
/// Largest accepted `||(K + beta V - F - lambda)(f + g)|| / ||f + g||`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub beta: f64,
    pub lambda: f64,
    /// Window verdict of the diagonal condition at the limit.
    pub in_domain: bool,
    pub iterations: usize,
    pub contraction: f64,
    pub g: Vec<Complex64>,
}

/// Solves `lambda = G(beta, lambda)` by iteration from `lambda = 0`.
pub fn fixed_point_lambda(ctx: &ReductionContext, beta: f64) -> Result<FixedPoint> {
    let bound = ctx.lambda_bound();
    let mut lambda = 0.0;
    for step in 1..=FIXED_POINT_MAX_STEPS {
        let st = ctx.reduced_state(beta, lambda)?;
        let next = st.g_value;
        if !(next.abs() <= bound) {
            return Err(Error::DomainEscape { lambda: next, bound });
        }
        if (next - lambda).abs() <= FIXED_POINT_TOL {
            let st = if next == lambda { st } else { ctx.reduced_state(beta, next)? };
            return Ok(FixedPoint {
                beta,
                lambda: next,
                in_domain: st.in_domain(),
                iterations: step,
                contraction: st.contraction,
                g: st.g,
            });
        }
        lambda = next;
    }
    Err(Error::ContractionFailure(format!(
        "lambda = G(beta, lambda) unresolved after {FIXED_POINT_MAX_STEPS} steps at beta = {beta:e}"
    )))
}

/// `||(K + beta V - F - beta V_{eta eta} - lambda)(f + g)|| / ||f + g||` on the window.
pub fn eigen_check(ctx: &ReductionContext, fp: &FixedPoint) -> Result<f64> {
    let n = ctx.len();
    let mut h = fp.g.clone();
    h[ctx.eta_index] += 1.0;
    let vh = linalg::mat_vec(&ctx.matrix.entries, &h);
    let r: Vec<Complex64> =
        (0..n).map(|i| h[i] * (ctx.detunings[i] - fp.lambda) + vh[i] * fp.beta).collect();
    let residual = linalg::norm(&r) / linalg::norm(&h);
    if !(residual <= EIGEN_RESIDUAL_TOL) {
        return Err(Error::SolverInconsistency { residual, tolerance: EIGEN_RESIDUAL_TOL });
    }
    Ok(residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSolution {
    pub beta_grid: Vec<f64>,
    /// `NaN` where the iteration failed.
    pub lambda_values: Vec<f64>,
    pub in_domain: Vec<bool>,
    pub iterations: Vec<usize>,
    /// Error name per failed sample.
    pub failures: Vec<Option<String>>,
}

/// `fixed_point_lambda` over a grid of couplings.
pub fn solve_implicit(ctx: &ReductionContext, betas: &[f64]) -> ImplicitSolution {
    let runs: Vec<Result<FixedPoint>> = betas.par_iter().map(|&b| fixed_point_lambda(ctx, b)).collect();
    let mut out = ImplicitSolution {
        beta_grid: betas.to_vec(),
        lambda_values: Vec::with_capacity(betas.len()),
        in_domain: Vec::with_capacity(betas.len()),
        iterations: Vec::with_capacity(betas.len()),
        failures: Vec::with_capacity(betas.len()),
    };
    for r in runs {
        match r {
            Ok(fp) => {
                out.lambda_values.push(fp.lambda);
                out.in_domain.push(fp.in_domain);
                out.iterations.push(fp.iterations);
                out.failures.push(None);
            }
            Err(e) => {
                out.lambda_values.push(f64::NAN);
                out.in_domain.push(false);
                out.iterations.push(0);
                out.failures.push(Some(e.name().to_string()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScan {
    pub delta_levels: Vec<f64>,
    /// Fraction of the coupling grid in `[-delta, delta]` lying in the domain.
    pub densities: Vec<f64>,
    pub samples: usize,
    /// `lambda_2` on the scan window.
    pub lambda2: f64,
}

/// For each `delta`, the fraction of the midpoint grid of `samples` couplings
/// in `[-delta, delta]` whose fixed point converges inside the domain.
pub fn domain_scan(ctx: &ReductionContext, delta_levels: &[f64], samples: usize) -> Result<DomainScan> {
    if samples == 0 || delta_levels.iter().any(|d| !(*d > 0.0)) || delta_levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("delta levels must be positive and decreasing, samples positive".into()));
    }
    let v_is_zero = (0..ctx.len()).all(|j| (0..ctx.len()).all(|i| ctx.matrix.entries[(i, j)].norm() == 0.0));
    let problem = SeriesProblem::from_matrix(ctx.detunings.clone(), &ctx.matrix.entries, ctx.eta_index)?;
    let lambda2 = problem.recursive(2)?.0[1];
    if !v_is_zero && lambda2.abs() < 1e-10 {
        return Err(Error::DegenerateSecondCoefficient(lambda2));
    }
    let densities = delta_levels
        .iter()
        .map(|&delta| {
            let hits: usize = (0..samples)
                .into_par_iter()
                .filter(|&i| {
                    let beta = -delta + (i as f64 + 0.5) * 2.0 * delta / samples as f64;
                    fixed_point_lambda(ctx, beta).is_ok_and(|fp| fp.in_domain)
                })
                .count();
            hits as f64 / samples as f64
        })
        .collect();
    Ok(DomainScan { delta_levels: delta_levels.to_vec(), densities, samples, lambda2 })
}
