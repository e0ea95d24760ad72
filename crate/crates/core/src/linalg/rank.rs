use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};

use super::dense::{dense_rank, dense_rref, Rref, SparseRows};
use super::matrix::SparseMatrix;

/// Largest dimension accepted by [`exact_rational_rank`].
pub const EXACT_RATIONAL_MAX_DIM: usize = 200;

/// Outcome of singleton peeling: pivots found so far and what is left.
#[derive(Clone, Debug)]
pub struct PeelOutcome {
    pub peeled: usize,
    pub residual: SparseRows,
    pub residual_cols: usize,
}

#[derive(Clone, Copy)]
enum Singleton {
    Col(usize),
    Row(usize),
}

/// Repeatedly removes a column with one nonzero (or a row with one nonzero)
/// together with the row (column) through it. Each removal is a pivot. Empty
/// rows and columns are dropped from the residual.
pub fn peel_singletons(m: &SparseMatrix) -> PeelOutcome {
    let (nr, nc) = (m.n_rows(), m.n_cols());
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for (i, j, _) in m.entries() {
        col_rows[j].push(i);
    }
    let mut row_count: Vec<usize> = (0..nr).map(|i| m.row_weight(i)).collect();
    let mut col_count: Vec<usize> = col_rows.iter().map(Vec::len).collect();
    let mut row_alive = vec![true; nr];
    let mut col_alive = vec![true; nc];

    let mut work: Vec<Singleton> = Vec::new();
    work.extend((0..nr).rev().filter(|&i| row_count[i] == 1).map(Singleton::Row));
    work.extend((0..nc).rev().filter(|&j| col_count[j] == 1).map(Singleton::Col));

    let mut peeled = 0;
    while let Some(item) = work.pop() {
        match item {
            Singleton::Col(c) => {
                if !col_alive[c] || col_count[c] != 1 {
                    continue;
                }
                let r = *col_rows[c].iter().find(|&&r| row_alive[r]).expect("live entry");
                peeled += 1;
                row_alive[r] = false;
                col_alive[c] = false;
                for (c2, _) in m.row(r) {
                    if col_alive[c2] {
                        col_count[c2] -= 1;
                        if col_count[c2] == 1 {
                            work.push(Singleton::Col(c2));
                        }
                    }
                }
            }
            Singleton::Row(r) => {
                if !row_alive[r] || row_count[r] != 1 {
                    continue;
                }
                let c = m.row(r).map(|(c, _)| c).find(|&c| col_alive[c]).expect("live entry");
                peeled += 1;
                row_alive[r] = false;
                col_alive[c] = false;
                for &r2 in &col_rows[c] {
                    if row_alive[r2] {
                        row_count[r2] -= 1;
                        if row_count[r2] == 1 {
                            work.push(Singleton::Row(r2));
                        }
                    }
                }
            }
        }
    }

    let mut remap = vec![usize::MAX; nc];
    let mut residual_cols = 0;
    for j in 0..nc {
        if col_alive[j] && col_count[j] > 0 {
            remap[j] = residual_cols;
            residual_cols += 1;
        }
    }
    let residual = (0..nr)
        .filter(|&i| row_alive[i] && row_count[i] > 0)
        .map(|i| {
            m.row(i)
                .filter(|&(c, _)| col_alive[c])
                .map(|(c, v)| (remap[c], v))
                .collect()
        })
        .collect();
    PeelOutcome { peeled, residual, residual_cols }
}

fn all_rows(m: &SparseMatrix) -> SparseRows {
    (0..m.n_rows()).map(|i| m.row(i).collect()).collect()
}

/// Exact rank over the matrix field.
pub fn rank(m: &SparseMatrix, use_peeling: bool) -> usize {
    let q = m.field().modulus();
    if use_peeling {
        let out = peel_singletons(m);
        out.peeled + dense_rank(&out.residual, out.residual_cols, q)
    } else {
        dense_rank(&all_rows(m), m.n_cols(), q)
    }
}

/// Rank of rows given as sparse `(col, value)` lists, modulo a prime.
pub fn rank_of_rows(rows: &[Vec<(usize, u32)>], n_cols: usize, modulus: u32) -> usize {
    dense_rank(rows, n_cols, modulus)
}

pub fn nullity(m: &SparseMatrix) -> usize {
    m.n_cols() - rank(m, true)
}

/// Fully reduced echelon form of the whole matrix.
pub fn rref(m: &SparseMatrix) -> Rref {
    dense_rref(&all_rows(m), m.n_cols(), m.field().modulus())
}

/// Rank over the rationals of the matrix read as nonnegative integers,
/// by fraction-free (Bareiss) elimination.
pub fn exact_rational_rank(m: &SparseMatrix) -> Result<usize> {
    if m.n_rows() > EXACT_RATIONAL_MAX_DIM || m.n_cols() > EXACT_RATIONAL_MAX_DIM {
        return Err(Error::InstanceTooLarge(format!(
            "exact rational rank limited to {EXACT_RATIONAL_MAX_DIM} rows and columns"
        )));
    }
    let mut a: Vec<Vec<BigInt>> = m
        .to_dense()
        .into_iter()
        .map(|row| row.into_iter().map(BigInt::from).collect())
        .collect();
    let (nr, nc) = (m.n_rows(), m.n_cols());
    let mut prev = BigInt::from(1);
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..nr {
            for j in c + 1..nc {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    Ok(r)
}
