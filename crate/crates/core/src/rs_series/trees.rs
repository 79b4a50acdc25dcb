use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tree size accepted by [`enumerate_trees`].
pub const MAX_TREE_SIZE: usize = 12;

/// A rooted `N`-tree: `nu` in `Z_+^N` with `|nu| = N - 1` and
/// `nu_k + ... + nu_N <= N - k` for `2 <= k <= N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootedTree {
    nu: Vec<u32>,
}

impl RootedTree {
    pub fn new(nu: Vec<u32>) -> Result<Self> {
        if !is_tree(&nu) {
            return Err(Error::Precondition(format!("{nu:?} is not a rooted tree")));
        }
        Ok(Self { nu })
    }

    /// The single tree with one vertex.
    pub fn root() -> Self {
        Self { nu: vec![0] }
    }

    pub fn size(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[u32] {
        &self.nu
    }
}

pub fn is_tree(nu: &[u32]) -> bool {
    let n = nu.len();
    if n == 0 || nu.iter().map(|&x| x as usize).sum::<usize>() != n - 1 {
        return false;
    }
    let mut suffix = 0usize;
    for k in (2..=n).rev() {
        suffix += nu[k - 1] as usize;
        if suffix > n - k {
            return false;
        }
    }
    true
}

/// All rooted `n`-trees in lexicographic order.
pub fn enumerate_trees(n: usize) -> Result<Vec<RootedTree>> {
    if n == 0 || n > MAX_TREE_SIZE {
        return Err(Error::GuardOverflow(format!("tree size {n} outside 1..={MAX_TREE_SIZE}")));
    }
    // fill nu_N, nu_{N-1}, ..., nu_2 under the suffix constraints; nu_1 takes the rest
    fn fill(k: usize, n: usize, suffix: usize, nu: &mut Vec<u32>, out: &mut Vec<RootedTree>) {
        if k == 1 {
            nu[0] = (n - 1 - suffix) as u32;
            out.push(RootedTree { nu: nu.clone() });
            return;
        }
        for c in 0..=(n - k - suffix) {
            nu[k - 1] = c as u32;
            fill(k - 1, n, suffix + c, nu, out);
        }
        nu[k - 1] = 0;
    }
    let mut out = Vec::new();
    fill(n, n, 0, &mut vec![0; n], &mut out);
    out.sort();
    Ok(out)
}

/// `(nu', nu'') + (1, 0, ..., 0)`.
pub fn compose_trees(first: &RootedTree, second: &RootedTree) -> RootedTree {
    let mut nu = first.nu.clone();
    nu.extend_from_slice(&second.nu);
    nu[0] += 1;
    RootedTree { nu }
}

/// The unique split `nu = (nu', nu'') + (1, 0, ..., 0)` into two trees.
pub fn decompose_tree(tree: &RootedTree) -> Result<(RootedTree, RootedTree)> {
    let n = tree.size();
    if n < 2 {
        return Err(Error::Precondition("a single vertex has no decomposition".into()));
    }
    let mut head = tree.nu.clone();
    head[0] -= 1;
    let mut found = None;
    for split in 1..n {
        let (a, b) = head.split_at(split);
        if is_tree(a) && is_tree(b) {
            if found.is_some() {
                return Err(Error::Precondition(format!("{:?} splits in more than one way", tree.nu)));
            }
            found = Some((RootedTree { nu: a.to_vec() }, RootedTree { nu: b.to_vec() }));
        }
    }
    found.ok_or_else(|| Error::Precondition(format!("{:?} has no decomposition", tree.nu)))
}
