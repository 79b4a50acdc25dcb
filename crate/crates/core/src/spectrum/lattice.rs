use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `n = (n1, n2)` of the Floquet lattice `Z x N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub n1: i64,
    pub n2: usize,
}

impl LatticeIndex {
    pub fn new(n1: i64, n2: usize) -> Result<Self> {
        if n2 == 0 {
            return Err(Error::Precondition("lattice index requires n2 >= 1".into()));
        }
        Ok(Self { n1, n2 })
    }
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n1, self.n2)
    }
}

/// Finite section `|n1| <= n1_max`, `1 <= n2 <= n2_max` of the lattice.
///
/// Points are laid out row-major in `n2`, so the flat index of `(n1, n2)` is
/// `(n2 - 1) * (2 n1_max + 1) + (n1 + n1_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationWindow {
    pub n1_max: u32,
    pub n2_max: u32,
}

impl TruncationWindow {
    pub fn new(n1_max: u32, n2_max: u32) -> Result<Self> {
        if n1_max == 0 || n2_max == 0 {
            return Err(Error::Precondition(format!(
                "window extents must be positive, got ({n1_max}, {n2_max})"
            )));
        }
        Ok(Self { n1_max, n2_max })
    }

    pub fn row_len(&self) -> usize {
        2 * self.n1_max as usize + 1
    }

    pub fn len(&self) -> usize {
        self.row_len() * self.n2_max as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: LatticeIndex) -> bool {
        n.n1.unsigned_abs() <= self.n1_max as u64 && n.n2 >= 1 && n.n2 <= self.n2_max as usize
    }

    pub fn index_of(&self, n: LatticeIndex) -> Option<usize> {
        self.contains(n).then(|| {
            (n.n2 - 1) * self.row_len() + (n.n1 + self.n1_max as i64) as usize
        })
    }

    pub fn point(&self, i: usize) -> LatticeIndex {
        let row = self.row_len();
        LatticeIndex {
            n1: (i % row) as i64 - self.n1_max as i64,
            n2: i / row + 1,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = LatticeIndex> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn require(&self, n: LatticeIndex) -> Result<usize> {
        self.index_of(n).ok_or_else(|| {
            Error::Precondition(format!(
                "window ({}, {}) does not contain {n}",
                self.n1_max, self.n2_max
            ))
        })
    }

    /// True when every point of `self` also lies in `other`.
    pub fn is_subset_of(&self, other: &TruncationWindow) -> bool {
        self.n1_max <= other.n1_max && self.n2_max <= other.n2_max
    }
}

impl fmt::Display for TruncationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n1_max, self.n2_max)
    }
}
