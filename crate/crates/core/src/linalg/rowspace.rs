use super::dense::Rref;
use super::field::Fp;
use super::matrix::SparseMatrix;
use super::rank::rref;

/// A row space kept in fully reduced echelon form under row insertions.
///
/// A column is frozen exactly when it is the pivot of a row with a single
/// nonzero, so the frozen count is maintained from row weights.
#[derive(Clone, Debug)]
pub struct RowSpace {
    f: Fp,
    n_cols: usize,
    rows: Vec<Vec<u32>>,
    weights: Vec<usize>,
    pivot_row: Vec<Option<usize>>,
    pivot_col: Vec<usize>,
    frozen: usize,
}

impl RowSpace {
    pub fn new(n_cols: usize, modulus: u32) -> Self {
        RowSpace {
            f: Fp::new(modulus),
            n_cols,
            rows: Vec::new(),
            weights: Vec::new(),
            pivot_row: vec![None; n_cols],
            pivot_col: Vec::new(),
            frozen: 0,
        }
    }

    pub fn from_rref(r: &Rref) -> Self {
        let mut s = Self::new(r.n_cols(), r.modulus);
        for (row, &pc) in r.rows().iter().zip(r.pivots()) {
            let w = row.iter().filter(|&&x| x != 0).count();
            s.pivot_row[pc] = Some(s.rows.len());
            s.pivot_col.push(pc);
            s.rows.push(row.clone());
            s.weights.push(w);
            s.frozen += usize::from(w == 1);
        }
        s
    }

    pub fn from_matrix(m: &SparseMatrix) -> Self {
        Self::from_rref(&rref(m))
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen
    }

    pub fn is_frozen(&self, c: usize) -> bool {
        self.pivot_row[c].is_some_and(|r| self.weights[r] == 1)
    }

    pub fn frozen_columns(&self) -> Vec<usize> {
        (0..self.n_cols).filter(|&c| self.is_frozen(c)).collect()
    }

    /// Inserts a sparse row; returns whether the rank grew.
    pub fn insert(&mut self, entries: &[(usize, u32)]) -> bool {
        let mut v = vec![0u32; self.n_cols];
        for &(c, x) in entries {
            v[c] = self.f.add(v[c], x);
        }
        for c in 0..self.n_cols {
            if v[c] == 0 {
                continue;
            }
            if let Some(r) = self.pivot_row[c] {
                let factor = v[c];
                for (x, &y) in v.iter_mut().zip(&self.rows[r]) {
                    if y != 0 {
                        *x = self.f.sub_mul(*x, factor, y);
                    }
                }
            }
        }
        let Some(pc) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.f.inv(v[pc]);
        for x in v.iter_mut() {
            *x = self.f.mul(*x, inv);
        }
        for r in 0..self.rows.len() {
            let factor = self.rows[r][pc];
            if factor == 0 {
                continue;
            }
            let row = &mut self.rows[r];
            for (x, &y) in row.iter_mut().zip(&v) {
                if y != 0 {
                    *x = self.f.sub_mul(*x, factor, y);
                }
            }
            let w = row.iter().filter(|&&x| x != 0).count();
            self.frozen = self.frozen + usize::from(w == 1) - usize::from(self.weights[r] == 1);
            self.weights[r] = w;
        }
        let w = v.iter().filter(|&&x| x != 0).count();
        self.frozen += usize::from(w == 1);
        self.pivot_row[pc] = Some(self.rows.len());
        self.pivot_col.push(pc);
        self.rows.push(v);
        self.weights.push(w);
        true
    }

    /// Inserts the unit row at column `c`.
    pub fn pin(&mut self, c: usize) -> bool {
        self.insert(&[(c, 1)])
    }
}
