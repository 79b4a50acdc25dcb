//! Perturbation theory for a single quasi-energy of a Floquet Hamiltonian
//! `K + beta V` with dense pure-point spectrum, evaluated on finite lattice
//! windows.

pub mod diophantine;
pub mod eigenlab;
pub mod error;
pub mod linalg;
pub mod perturbation;
pub mod presets;
pub mod reduction;
pub mod rs_series;
pub mod spectrum;

pub use error::{Error, Result};
