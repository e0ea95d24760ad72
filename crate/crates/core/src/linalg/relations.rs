//! Relations and frozen columns.
//!
//! With the kernel basis written as the columns of a matrix `X`, a column set
//! `I` supports a nonzero vector of the row space iff the rows of `X` indexed
//! by `I` are linearly dependent. A column is frozen iff its row of `X`
//! vanishes.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};

use super::dense::{dense_rank, Rref};
use super::matrix::SparseMatrix;
use super::rank::{nullity, rank, rref};

/// Outcome of [`is_proper_relation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationReport {
    pub target_set: BTreeSet<usize>,
    pub is_relation: bool,
    pub is_proper: bool,
    /// Members of the target set that are frozen.
    pub frozen_overlap: BTreeSet<usize>,
}

/// Kernel basis of a matrix over a finite field.
pub fn kernel_basis(m: &SparseMatrix) -> Result<Vec<Vec<u32>>> {
    if !m.field().is_finite() {
        return Err(Error::UnsupportedField("kernel basis needs a finite field".into()));
    }
    Ok(rref(m).kernel_basis())
}

/// Frozen columns in increasing order.
pub fn frozen_set(m: &SparseMatrix) -> Vec<usize> {
    let mask = rref(m).frozen_mask();
    (0..m.n_cols()).filter(|&i| mask[i]).collect()
}

fn check_set(m: &SparseMatrix, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("column set must be nonempty".into()));
    }
    if let Some(&c) = set.iter().find(|&&c| c >= m.n_cols()) {
        return Err(Error::InvalidArgument(format!("column {c} out of range")));
    }
    Ok(())
}

/// Whether some row combination has nonempty support inside `set`, decided by
/// comparing the rank before and after deleting those columns.
pub fn is_relation(m: &SparseMatrix, set: &[usize]) -> Result<bool> {
    check_set(m, set)?;
    Ok(rank(m, true) > rank(&m.delete_columns(set), true))
}

pub fn is_proper_relation(m: &SparseMatrix, set: &[usize]) -> Result<RelationReport> {
    check_set(m, set)?;
    let structure = RelationStructure::new(m);
    let target_set: BTreeSet<usize> = set.iter().copied().collect();
    let members: Vec<usize> = target_set.iter().copied().collect();
    Ok(RelationReport {
        is_relation: structure.is_relation(&members),
        is_proper: structure.is_proper(&members),
        frozen_overlap: members.iter().copied().filter(|&c| structure.frozen[c]).collect(),
        target_set,
    })
}

/// Kernel coordinates per column, for repeated relation queries on one matrix.
#[derive(Clone, Debug)]
pub struct RelationStructure {
    modulus: u32,
    nullity: usize,
    frozen: Vec<bool>,
    /// Row `i` lists the `i`-th coordinate of every kernel basis vector.
    coords: Vec<Vec<(usize, u32)>>,
}

impl RelationStructure {
    pub fn new(m: &SparseMatrix) -> Self {
        Self::from_rref(&rref(m))
    }

    pub fn from_rref(r: &Rref) -> Self {
        let basis = r.kernel_basis();
        let mut coords = vec![Vec::new(); r.n_cols()];
        for (k, v) in basis.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                if x != 0 {
                    coords[i].push((k, x));
                }
            }
        }
        RelationStructure {
            modulus: r.modulus,
            nullity: basis.len(),
            frozen: coords.iter().map(Vec::is_empty).collect(),
            coords,
        }
    }

    pub fn nullity(&self) -> usize {
        self.nullity
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|&&f| f).count()
    }

    /// Kernel coordinates of column `i` as sparse `(basis index, value)` pairs.
    pub fn coordinates(&self, i: usize) -> &[(usize, u32)] {
        &self.coords[i]
    }

    /// Rank of the kernel coordinate rows of `set`.
    pub fn coordinate_rank(&self, set: &[usize]) -> usize {
        let rows: Vec<_> = set.iter().map(|&i| self.coords[i].clone()).collect();
        dense_rank(&rows, self.nullity, self.modulus)
    }

    pub fn is_relation(&self, set: &[usize]) -> bool {
        self.coordinate_rank(set) < set.len()
    }

    /// Whether the non-frozen part of `set` is a nonempty relation.
    pub fn is_proper(&self, set: &[usize]) -> bool {
        let rest: Vec<usize> = set.iter().copied().filter(|&i| !self.frozen[i]).collect();
        !rest.is_empty() && self.is_relation(&rest)
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Number of proper relations of size `ell`, by enumerating all subsets.
pub fn count_proper_relations(m: &SparseMatrix, ell: usize, cap: u64) -> Result<u64> {
    if ell == 0 {
        return Err(Error::InvalidArgument("relation size must be at least 1".into()));
    }
    let n = m.n_cols();
    let subsets = binomial_u128(n, ell);
    if subsets > u128::from(cap) {
        return Err(Error::InstanceTooLarge(format!(
            "C({n}, {ell}) = {subsets} subsets exceed the cap {cap}"
        )));
    }
    if ell > n {
        return Ok(0);
    }
    let s = RelationStructure::new(m);
    let mut count = 0u64;
    let mut idx: Vec<usize> = (0..ell).collect();
    loop {
        if s.is_proper(&idx) {
            count += 1;
        }
        // next combination in lexicographic order
        let Some(pos) = (0..ell).rev().find(|&p| idx[p] < n - ell + p) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..ell {
            idx[p] = idx[p - 1] + 1;
        }
    }
    Ok(count)
}

/// Appends `theta` unit rows at independent uniform columns.
pub fn pin<R: Rng + ?Sized>(m: &SparseMatrix, theta: usize, rng: &mut R) -> Result<SparseMatrix> {
    if m.n_cols() == 0 {
        return Err(Error::InvalidArgument("cannot pin a matrix without columns".into()));
    }
    let cols: Vec<usize> = (0..theta).map(|_| rng.random_range(0..m.n_cols())).collect();
    m.with_unit_rows(&cols)
}

/// Like [`pin`] with the pinned columns drawn uniformly from `subset`.
pub fn pin_within<R: Rng + ?Sized>(
    m: &SparseMatrix,
    theta: usize,
    subset: &[usize],
    rng: &mut R,
) -> Result<SparseMatrix> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("pinning subset is empty".into()));
    }
    let cols: Vec<usize> = (0..theta).map(|_| subset[rng.random_range(0..subset.len())]).collect();
    m.with_unit_rows(&cols)
}

/// Both sides of the block nullity identity for `[[a, 0], [b, c]]`:
/// `nul(block) - nul(a)` and `n' - rank([b_*, c])`, where `b_*` drops the
/// columns of `b` that are frozen in `a`. The nonzero columns of `b` must not
/// form a proper relation of `a`.
pub fn nullity_delta_lemma_check(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
) -> Result<(i64, i64)> {
    let block = a.block_lower(b, c)?;
    let support: BTreeSet<usize> = b.entries().map(|(_, j, _)| j).collect();
    let structure = RelationStructure::new(a);
    let support: Vec<usize> = support.into_iter().collect();
    if !support.is_empty() && structure.is_proper(&support) {
        return Err(Error::HypothesisFailed(
            "nonzero columns of the lower-left block form a proper relation".into(),
        ));
    }
    let lhs = nullity(&block) as i64 - nullity(a) as i64;
    let b_star = b.select_columns(|j| !structure.is_frozen(j));
    let combined = b_star.transpose().vstack(&c.transpose())?.transpose();
    let rhs = c.n_cols() as i64 - rank(&combined, true) as i64;
    Ok((lhs, rhs))
}
