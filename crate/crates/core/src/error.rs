use thiserror::Error;

use crate::spectrum::LatticeIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("energy index {k} outside the model range (table holds {len} values)")]
    ModelRange { k: usize, len: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("commutator order {order} exceeds smoothness {smoothness}")]
    Smoothness { order: u32, smoothness: u32 },

    #[error("exact resonance at {index}: F_n - F = {gap:e}")]
    Resonance { index: LatticeIndex, gap: f64 },

    #[error("resonant term at k = {k}: fractional part {frac:e}")]
    ResonantTerm { k: usize, frac: f64 },

    #[error("no admissible exponents for r = {r}, alpha = {alpha}: {reason}")]
    InfeasibleExponents { r: u32, alpha: f64, reason: String },

    #[error("witness unavailable: x = {x} must exceed {threshold}")]
    WitnessUnavailable { x: f64, threshold: f64 },

    #[error("row n2 = {n2} carries {count} critical indices")]
    CriticalSetCorrupt { n2: usize, count: usize },

    #[error("inequality {name} violated (lhs {lhs:e}, rhs {rhs:e})")]
    InequalityViolation { name: &'static str, lhs: f64, rhs: f64 },

    #[error("(beta, lambda) = ({beta:e}, {lambda:e}) outside the admissible domain: {reason}")]
    Domain { beta: f64, lambda: f64, reason: String },

    #[error("ill-conditioned solve: residual {residual:e}")]
    Conditioning { residual: f64 },

    #[error("imaginary part {imag:e} exceeds hermiticity tolerance")]
    Hermiticity { imag: f64 },

    #[error("ambiguous eigenvector tracking: best overlap {overlap}")]
    AmbiguousTracking { overlap: f64 },

    #[error("all residuals are below the floating-point floor")]
    BelowFloatingPointFloor,

    #[error("fixed-point iterate lambda = {lambda:e} left |lambda| <= {bound:e}")]
    DomainEscape { lambda: f64, bound: f64 },

    #[error("contraction failure: {0}")]
    ContractionFailure(String),

    #[error("solver inconsistency: residual {residual:e} above {tolerance:e}")]
    SolverInconsistency { residual: f64, tolerance: f64 },

    #[error("combinatorial guard: {0}")]
    GuardOverflow(String),

    #[error("second coefficient |lambda_2| = {0:e} is degenerate")]
    DegenerateSecondCoefficient(f64),

    #[error("invalid table: {0}")]
    InvalidTable(String),
}

impl Error {
    /// Stable identifier used by the CLI when an error propagates out of a run.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ModelRange { .. } => "model-range",
            Error::Precondition(_) => "precondition",
            Error::Smoothness { .. } => "smoothness",
            Error::Resonance { .. } => "resonance",
            Error::ResonantTerm { .. } => "resonance",
            Error::InfeasibleExponents { .. } => "infeasible-exponent",
            Error::WitnessUnavailable { .. } => "witness-unavailable",
            Error::CriticalSetCorrupt { .. } => "critical-set",
            Error::InequalityViolation { .. } => "inequality-violation",
            Error::Domain { .. } => "domain",
            Error::Conditioning { .. } => "conditioning",
            Error::Hermiticity { .. } => "hermiticity",
            Error::AmbiguousTracking { .. } => "ambiguous-tracking",
            Error::BelowFloatingPointFloor => "below-floating-point-floor",
            Error::DomainEscape { .. } => "domain-escape",
            Error::ContractionFailure(_) => "contraction-failure",
            Error::SolverInconsistency { .. } => "solver-inconsistency",
            Error::GuardOverflow(_) => "guard-overflow",
            Error::DegenerateSecondCoefficient(_) => "degenerate-lambda2",
            Error::InvalidTable(_) => "invalid-table",
        }
    }
}
