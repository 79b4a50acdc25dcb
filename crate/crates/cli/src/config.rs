//! TOML experiment configuration. Every section is optional and falls back to
//! the reference model.

use std::path::Path;

use serde::Deserialize;

use floquet_core::diophantine::{select_exponents, Exponents};
use floquet_core::linalg::Complex64;
use floquet_core::perturbation::{counterexample_perturbation, FourierPerturbation, XiSequence};
use floquet_core::presets::{GOLDEN_RATIO, DEFAULT_SMOOTHNESS};
use floquet_core::spectrum::{FloquetGrid, LatticeIndex, SpectrumModel, TruncationWindow};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub frequency: FrequencySection,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub windows: WindowsSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectrumSection {
    /// `E_k = k^p`
    Power {
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(rename = "C_E", default = "gap_constant")]
        gap_constant: f64,
    },
    /// `values[k - 1] = E_k`
    Table {
        values: Vec<f64>,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(rename = "C_E")]
        gap_constant: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn gap_constant() -> f64 {
    1.5
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self::Power { p: 2.0, alpha: 1.0, gap_constant: 1.5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationSection {
    Zero,
    /// `V(k, p, q) = a_|k| e^(i phase sign k) (1 + |p - q|)^(-decay)`, `diagonal` on `k = 0, p = q`.
    Band {
        amplitudes: Vec<f64>,
        #[serde(default = "two")]
        decay: f64,
        #[serde(default)]
        diagonal: f64,
        #[serde(default)]
        phase: f64,
    },
    /// The divergent construction with `xi_k = 1 / (k ln^2(k + 1))`.
    Counterexample,
    /// Rows `[k, p, q, re, im]`; the conjugate entries are implied.
    Table { entries: Vec<[f64; 5]> },
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self::Band { amplitudes: vec![0.1, 0.2], decay: 2.0, diagonal: 0.0, phase: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    #[serde(default = "golden")]
    pub omega: f64,
    /// `[lo, hi, count]`: evenly spaced frequencies for `dioph-scan`.
    pub scan: Option<(f64, f64, usize)>,
}

fn golden() -> f64 {
    GOLDEN_RATIO
}

impl Default for FrequencySection {
    fn default() -> Self {
        Self { omega: GOLDEN_RATIO, scan: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    #[serde(default = "smoothness")]
    pub r: u32,
    /// Omitted for the automatic choice.
    pub ell: Option<u32>,
}

fn smoothness() -> u32 {
    DEFAULT_SMOOTHNESS
}

impl Default for ExponentsSection {
    fn default() -> Self {
        Self { r: DEFAULT_SMOOTHNESS, ell: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    /// Increasing `[n1_max, n2_max]` windows; the last one is the working window.
    #[serde(default = "ladder")]
    pub ladder: Vec<(u32, u32)>,
    #[serde(default = "eta")]
    pub eta: (i64, usize),
}

fn ladder() -> Vec<(u32, u32)> {
    vec![(6, 8), (12, 12), (21, 15)]
}
fn eta() -> (i64, usize) {
    (0, 1)
}

impl Default for WindowsSection {
    fn default() -> Self {
        Self { ladder: ladder(), eta: eta() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    /// Largest level probed by `spectrum-check` and `density-appendix-a`.
    #[serde(default = "k_max")]
    pub k_max: usize,
    /// `rs-compute` order.
    #[serde(default = "rs_order")]
    pub ell: usize,
    #[serde(default)]
    pub method: RsMethod,
    /// `[lo, hi, per_sign]` symmetric logarithmic coupling grid.
    #[serde(default = "betas")]
    pub betas: (f64, f64, usize),
    #[serde(default = "deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "samples")]
    pub samples: usize,
    /// `[u, v]`
    #[serde(default = "interval")]
    pub interval: (f64, f64),
    #[serde(default = "omega_range")]
    pub omega_range: (f64, f64),
    #[serde(default = "checkpoints")]
    pub checkpoints: Vec<usize>,
    #[serde(default = "thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "cutoff_levels")]
    pub cutoff_levels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RsMethod {
    #[default]
    Recursive,
    Tree,
}

impl RsMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RsMethod::Recursive => "recursive",
            RsMethod::Tree => "tree",
        }
    }
}

fn k_max() -> usize {
    10_000
}
fn rs_order() -> usize {
    4
}
fn betas() -> (f64, f64, usize) {
    (1e-4, 1e-2, 8)
}
fn deltas() -> Vec<f64> {
    vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
}
fn samples() -> usize {
    400
}
fn interval() -> (f64, f64) {
    (0.3, 0.4)
}
fn omega_range() -> (f64, f64) {
    (1.0, 2.0)
}
fn checkpoints() -> Vec<usize> {
    vec![100, 1_000, 10_000, 100_000]
}
fn thetas() -> Vec<f64> {
    vec![0.3, 0.4]
}
fn cutoff_levels() -> Vec<usize> {
    vec![10, 20, 40]
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: None,
            k_max: k_max(),
            ell: rs_order(),
            method: RsMethod::default(),
            betas: betas(),
            deltas: deltas(),
            samples: samples(),
            interval: interval(),
            omega_range: omega_range(),
            checkpoints: checkpoints(),
            thetas: thetas(),
            cutoff_levels: cutoff_levels(),
        }
    }
}

/// A parsed config together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(text)
    }

    pub fn parse(text: String) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(&text).map_err(|e| CliError::Usage(e.to_string()))?;
        config.validate()?;
        Ok(Self { config, text })
    }
}

fn usage(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.windows.ladder.is_empty() {
            return Err(usage("windows.ladder", "needs at least one window"));
        }
        let (lo, hi, n) = self.run.betas;
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(usage("run.betas", "need 0 < lo < hi and at least 2 points per sign"));
        }
        if self.run.samples == 0 {
            return Err(usage("run.samples", "must be positive"));
        }
        if let Some((lo, hi, n)) = self.frequency.scan {
            if !(lo > 0.0 && hi >= lo) || n == 0 {
                return Err(usage("frequency.scan", "need 0 < lo <= hi and a positive count"));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> SpectrumModel {
        match &self.spectrum {
            SpectrumSection::Power { p, alpha, gap_constant } => SpectrumModel::power(*p, *alpha, *gap_constant),
            SpectrumSection::Table { values, alpha, gap_constant } => {
                SpectrumModel::table(values.clone(), *alpha, *gap_constant)
            }
        }
    }

    pub fn grid_at(&self, omega: f64) -> Result<FloquetGrid, CliError> {
        let (n1, n2) = self.windows.eta;
        Ok(FloquetGrid::new(self.model(), omega, LatticeIndex::new(n1, n2)?)?)
    }

    pub fn grid(&self) -> Result<FloquetGrid, CliError> {
        self.grid_at(self.frequency.omega)
    }

    pub fn perturbation(&self) -> Result<FourierPerturbation, CliError> {
        Ok(match &self.perturbation {
            PerturbationSection::Zero => FourierPerturbation::zero(),
            PerturbationSection::Band { amplitudes, decay, diagonal, phase } => {
                FourierPerturbation::band(amplitudes.clone(), *decay, *diagonal)?.with_phase(*phase)
            }
            PerturbationSection::Counterexample => {
                counterexample_perturbation(&self.model(), self.frequency.omega, XiSequence::LogSquared)?
            }
            PerturbationSection::Table { entries } => {
                let mut rows = Vec::with_capacity(entries.len());
                for (i, &[k, p, q, re, im]) in entries.iter().enumerate() {
                    let ints = [k, p, q];
                    if ints.iter().any(|x| x.fract() != 0.0) || p < 1.0 || q < 1.0 {
                        return Err(usage(&format!("perturbation.entries[{i}]"), "k, p, q must be integers with p, q >= 1"));
                    }
                    rows.push(((k as i64, p as usize, q as usize), Complex64::new(re, im)));
                }
                FourierPerturbation::table(rows)?
            }
        })
    }

    pub fn exponents(&self) -> Result<Exponents, CliError> {
        let alpha = match &self.spectrum {
            SpectrumSection::Power { alpha, .. } | SpectrumSection::Table { alpha, .. } => *alpha,
        };
        Ok(select_exponents(self.exponents.r, alpha, self.exponents.ell)?)
    }

    pub fn ladder(&self) -> Result<Vec<TruncationWindow>, CliError> {
        self.windows.ladder.iter().map(|&(a, b)| Ok(TruncationWindow::new(a, b)?)).collect()
    }

    /// The last window of the ladder.
    pub fn window(&self) -> Result<TruncationWindow, CliError> {
        Ok(*self.ladder()?.last().expect("validated non-empty ladder"))
    }

    pub fn omegas(&self) -> Vec<f64> {
        match self.frequency.scan {
            Some((lo, _, 1)) => vec![lo],
            Some((lo, hi, n)) => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            None => vec![self.frequency.omega],
        }
    }
}
