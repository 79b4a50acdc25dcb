//! The reference configuration used by the examples, tests and CLI defaults.

use crate::diophantine::{select_exponents, Exponents};
use crate::error::Result;
use crate::perturbation::FourierPerturbation;
use crate::spectrum::{FloquetGrid, LatticeIndex, SpectrumModel};

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
pub const DEFAULT_SMOOTHNESS: u32 = 20;

/// `E_k = k^2`, `alpha = 1`, `C_E = 1.5`, `omega` the golden ratio, `eta = (0, 1)`.
pub fn default_grid() -> FloquetGrid {
    FloquetGrid::new(SpectrumModel::quadratic(), GOLDEN_RATIO, LatticeIndex { n1: 0, n2: 1 })
        .expect("default grid is valid")
}

/// Real band with `|k| <= 1`: `V(k, p, q) = a_|k| (1 + |p - q|)^(-2)`, `a = (0.1, 0.2)`, zero diagonal.
pub fn default_perturbation() -> FourierPerturbation {
    FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.0).expect("default band is valid")
}

pub fn default_exponents() -> Result<Exponents> {
    select_exponents(DEFAULT_SMOOTHNESS, 1.0, None)
}
