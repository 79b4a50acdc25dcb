use std::path::{Path, PathBuf};

use serde::Serialize;

use floquet_core::diophantine::{omega_stability_report, translate_density_scan, DiophantineProfile};
use floquet_core::eigenlab::{domain_scan, eigen_check, eigen_sweep, fixed_point_lambda, symmetric_log_grid};
use floquet_core::perturbation::{cutoff_bias_bound, cutoff_mean_estimate, decay_check, divergence_partial_sums, DecayReport};
use floquet_core::reduction::ReductionContext;
use floquet_core::rs_series::{rs_recursive, rs_tree_formula, tail_diagnostic, MAX_TREE_ORDER};
use floquet_core::Error;

use crate::config::{LoadedConfig, RsMethod};
use crate::error::CliError;
use crate::output::{self, real, Header};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SpectrumCheck,
    DiophScan,
    RsCompute,
    EigenVerify,
    DomainDensity,
    Counterexample,
    DensityAppendixA,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SpectrumCheck => "spectrum-check",
            Command::DiophScan => "dioph-scan",
            Command::RsCompute => "rs-compute",
            Command::EigenVerify => "eigen-verify",
            Command::DomainDensity => "domain-density",
            Command::Counterexample => "counterexample",
            Command::DensityAppendixA => "density-appendix-a",
        }
    }
}

/// Runs one subcommand and returns the files written.
pub fn run(command: Command, loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed.or(loaded.config.run.seed);
    match command {
        Command::SpectrumCheck => spectrum_check(loaded, seed, out),
        Command::DiophScan => dioph_scan(loaded, seed, out),
        Command::RsCompute => rs_compute(loaded, seed, out),
        Command::EigenVerify => eigen_verify(loaded, seed, out),
        Command::DomainDensity => domain_density(loaded, seed, out),
        Command::Counterexample => counterexample(loaded, require_seed(command, seed)?, out),
        Command::DensityAppendixA => density_appendix_a(loaded, require_seed(command, seed)?, out),
    }
}

fn require_seed(command: Command, seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage(format!("run.seed: required by {} (or pass --seed)", command.name())))
}

fn context(loaded: &LoadedConfig) -> Result<ReductionContext, CliError> {
    let c = &loaded.config;
    let grid = c.grid()?;
    let window = c.window()?;
    let profile = DiophantineProfile::estimate(&grid, c.exponents()?, window)?;
    Ok(ReductionContext::new(&grid, &c.perturbation()?, &profile, window)?)
}

#[derive(Serialize)]
struct SpectrumReport {
    model: String,
    k_max: usize,
    strictly_increasing: bool,
    min_gap_ratio: f64,
    gap_constant: f64,
    gap_condition_holds: bool,
    decay: Option<DecayReport>,
    /// Error name when the decay check could not run.
    decay_error: Option<String>,
}

fn spectrum_check(loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let model = c.model();
    // the gap check reads E_{k_max + 1}
    let k_max = model.max_index().map_or(c.run.k_max, |n| c.run.k_max.min(n.saturating_sub(1)));
    let min_gap_ratio = model.gap_check(k_max)?;
    let window = c.window()?;
    let (decay, decay_error) = match decay_check(&c.perturbation()?, window, c.exponents.r) {
        Ok(d) => (Some(d), None),
        Err(e @ (Error::Smoothness { .. } | Error::ModelRange { .. })) => (None, Some(e.name().to_string())),
        Err(e) => return Err(e.into()),
    };
    let report = SpectrumReport {
        model: model.label.clone(),
        k_max,
        strictly_increasing: model.is_strictly_increasing(k_max + 1)?,
        min_gap_ratio,
        gap_constant: model.gap_constant,
        gap_condition_holds: min_gap_ratio >= model.gap_constant,
        decay,
        decay_error,
    };
    let header = Header::new(Command::SpectrumCheck.name(), &loaded.text, seed, Some(window));
    Ok(vec![output::write(out, "spectrum-check.json", &output::json(&header, &report)?)?])
}

fn dioph_scan(loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let sigma = c.exponents()?.sigma;
    let ladder = c.ladder()?;
    let mut rows = Vec::new();
    for omega in c.omegas() {
        for entry in omega_stability_report(&c.grid_at(omega)?, sigma, &ladder)? {
            rows.push(vec![
                real(omega),
                entry.window.n1_max.to_string(),
                entry.window.n2_max.to_string(),
                real(entry.gamma_hat),
                entry.flagged.to_string(),
            ]);
        }
    }
    let header = Header::new(Command::DiophScan.name(), &loaded.text, seed, Some(c.window()?));
    let text = output::csv(&header, &["omega", "window_n1", "window_n2", "gamma_hat", "flagged"], &rows);
    Ok(vec![output::write(out, "dioph-scan.csv", &text)?])
}

#[derive(Serialize)]
struct RsReport {
    ell: usize,
    lambdas: Vec<f64>,
    /// Last difference of each coefficient along the window ladder.
    tail: Vec<f64>,
    window: (u32, u32),
    method: &'static str,
    /// Largest relative difference to the other method, when it can run.
    agreement: Option<f64>,
    shift: f64,
}

fn rs_compute(loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let (grid, v, window, ell) = (c.grid()?, c.perturbation()?, c.window()?, c.run.ell);
    let method = c.run.method;
    let exp = match method {
        RsMethod::Recursive => rs_recursive(&grid, &v, ell, window)?,
        RsMethod::Tree => rs_tree_formula(&grid, &v, ell, window)?,
    };
    let agreement = if ell <= MAX_TREE_ORDER {
        let other = match method {
            RsMethod::Recursive => rs_tree_formula(&grid, &v, ell, window)?,
            RsMethod::Tree => rs_recursive(&grid, &v, ell, window)?,
        };
        Some(exp.max_relative_difference(&other, f64::MIN_POSITIVE))
    } else {
        None
    };
    let ladder = c.ladder()?;
    let tail = if ladder.len() >= 2 { tail_diagnostic(&grid, &v, ell, &ladder)?.last_differences() } else { Vec::new() };
    let report = RsReport {
        ell,
        lambdas: exp.lambdas,
        tail,
        window: (window.n1_max, window.n2_max),
        method: method.as_str(),
        agreement,
        shift: exp.shift,
    };
    let header = Header::new(Command::RsCompute.name(), &loaded.text, seed, Some(window));
    Ok(vec![output::write(out, "rs-compute.json", &output::json(&header, &report)?)?])
}

fn eigen_verify(loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let ctx = context(loaded)?;
    let (lo, hi, per_sign) = c.run.betas;
    let betas = symmetric_log_grid(lo, hi, per_sign);
    let eig = eigen_sweep(&ctx.grid, &c.perturbation()?, &betas, ctx.window);
    let rows: Vec<Vec<String>> = betas
        .iter()
        .zip(eig)
        .map(|(&beta, e)| {
            let (f_beta, overlap) = match e {
                Ok(r) => (r.f_beta_value, r.overlap),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let (lambda, in_domain, residual) = match fixed_point_lambda(&ctx, beta) {
                Ok(fp) => {
                    let residual = match eigen_check(&ctx, &fp) {
                        Ok(r) => r,
                        Err(Error::SolverInconsistency { residual, .. }) => residual,
                        Err(_) => f64::NAN,
                    };
                    (fp.lambda, fp.in_domain, residual)
                }
                Err(_) => (f64::NAN, false, f64::NAN),
            };
            vec![real(beta), real(f_beta), real(lambda), in_domain.to_string(), real(residual), real(overlap)]
        })
        .collect();
    let header = Header::new(Command::EigenVerify.name(), &loaded.text, seed, Some(ctx.window));
    let text = output::csv(&header, &["beta", "F_beta", "lambda_fp", "in_domain", "residual", "overlap"], &rows);
    Ok(vec![output::write(out, "eigen-verify.csv", &text)?])
}

fn domain_density(loaded: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let ctx = context(loaded)?;
    let scan = domain_scan(&ctx, &c.run.deltas, c.run.samples)?;
    let rows: Vec<Vec<String>> = scan
        .delta_levels
        .iter()
        .zip(&scan.densities)
        .map(|(d, rho)| vec![real(*d), real(*rho), scan.samples.to_string()])
        .collect();
    let header = Header::new(Command::DomainDensity.name(), &loaded.text, seed, Some(ctx.window));
    let text = output::csv(&header, &["delta", "density", "samples"], &rows);
    Ok(vec![output::write(out, "domain-density.csv", &text)?])
}

fn counterexample(loaded: &LoadedConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let checkpoints = &c.run.checkpoints;
    let sums = divergence_partial_sums(&c.model(), c.frequency.omega, c.windows.eta.1, checkpoints)?;
    let rows: Vec<Vec<String>> = checkpoints
        .iter()
        .zip(&sums)
        .enumerate()
        .map(|(i, (n, s))| {
            let step = if i == 0 { f64::NAN } else { s - sums[i - 1] };
            vec![n.to_string(), real(*s), real(step)]
        })
        .collect();
    let header = Header::new(Command::Counterexample.name(), &loaded.text, Some(seed), None);
    let divergence = output::csv(&header, &["n", "partial_sum", "increment"], &rows);

    let mut rows = Vec::new();
    for (i, &theta) in c.run.thetas.iter().enumerate() {
        for (j, &k) in c.run.cutoff_levels.iter().enumerate() {
            let h = 2f64.powi(k as i32);
            let sub_seed = seed.wrapping_add((i * c.run.cutoff_levels.len() + j) as u64);
            let est = cutoff_mean_estimate(h, k, theta, c.run.samples, sub_seed)?;
            let target = theta * (k as f64).ln();
            let allowed = cutoff_bias_bound(h, k, theta) + 3.0 * est.stderr;
            rows.push(vec![
                real(theta),
                k.to_string(),
                real(h),
                real(est.mean),
                real(est.stderr),
                real(target),
                real(allowed),
                ((est.mean - target).abs() <= allowed).to_string(),
            ]);
        }
    }
    let cutoff = output::csv(
        &header,
        &["theta", "k", "h", "mean", "stderr", "target", "allowed_deviation", "within"],
        &rows,
    );
    Ok(vec![
        output::write(out, "counterexample-divergence.csv", &divergence)?,
        output::write(out, "counterexample-cutoff.csv", &cutoff)?,
    ])
}

fn density_appendix_a(loaded: &LoadedConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let c = &loaded.config;
    let r = &c.run;
    let scan = translate_density_scan(&c.model(), r.interval, r.omega_range, r.k_max, r.samples, seed)?;
    let row = vec![
        real(r.interval.0),
        real(r.interval.1),
        real(r.omega_range.0),
        real(r.omega_range.1),
        r.k_max.to_string(),
        scan.samples.to_string(),
        scan.hits.to_string(),
        real(scan.fraction),
    ];
    let header = Header::new(Command::DensityAppendixA.name(), &loaded.text, Some(seed), None);
    let text =
        output::csv(&header, &["u", "v", "omega_lo", "omega_hi", "k_max", "samples", "hits", "fraction"], &[row]);
    Ok(vec![output::write(out, "density-appendix-a.csv", &text)?])
}
