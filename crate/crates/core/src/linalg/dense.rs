//! Dense Gaussian elimination. Pivots are taken column by column, using the
//! first remaining row with a nonzero entry, so results are deterministic.

use super::field::Fp;

/// Rows given as sparse `(col, value)` lists over `0..n_cols`.
pub(crate) type SparseRows = Vec<Vec<(usize, u32)>>;

/// Fully reduced row echelon form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub(crate) n_cols: usize,
    pub(crate) modulus: u32,
    /// Pivot column of each row, increasing.
    pub(crate) pivots: Vec<usize>,
    /// Rows with a one at their pivot and zeros in every other pivot column.
    pub(crate) rows: Vec<Vec<u32>>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    fn is_pivot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_cols];
        for &c in &self.pivots {
            mask[c] = true;
        }
        mask
    }

    /// One kernel vector per free column: a one there, minus the row entries
    /// at the pivots.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let f = Fp::new(self.modulus);
        let pivot = self.is_pivot_mask();
        (0..self.n_cols)
            .filter(|&c| !pivot[c])
            .map(|free| {
                let mut v = vec![0u32; self.n_cols];
                v[free] = 1;
                for (row, &pc) in self.rows.iter().zip(&self.pivots) {
                    v[pc] = f.neg(row[free]);
                }
                v
            })
            .collect()
    }

    /// Columns on which every kernel vector vanishes: pivots whose row is a
    /// unit vector.
    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_cols];
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            if row.iter().filter(|&&x| x != 0).count() == 1 {
                mask[pc] = true;
            }
        }
        mask
    }
}

/// Bit-packed rows over GF(2).
struct BitRows {
    words: usize,
    data: Vec<u64>,
}

impl BitRows {
    fn new(rows: &[Vec<(usize, u32)>], n_cols: usize) -> Self {
        let words = n_cols.div_ceil(64).max(1);
        let mut data = vec![0u64; words * rows.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                data[i * words + c / 64] ^= 1 << (c % 64);
            }
        }
        BitRows { words, data }
    }

    #[inline]
    fn bit(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn swap(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    /// `row[dst] ^= row[src]` from word `from` onward.
    #[inline]
    fn xor_into(&mut self, dst: usize, src: usize, from: usize) {
        let w = self.words;
        let (d, s) = (dst * w, src * w);
        for k in from..w {
            let x = self.data[s + k];
            self.data[d + k] ^= x;
        }
    }

    fn eliminate(&mut self, n_rows: usize, n_cols: usize, full: bool) -> Vec<usize> {
        let mut pivots = Vec::new();
        for c in 0..n_cols {
            let r = pivots.len();
            if r == n_rows {
                break;
            }
            let Some(p) = (r..n_rows).find(|&i| self.bit(i, c)) else {
                continue;
            };
            self.swap(r, p);
            let start = if full { 0 } else { r + 1 };
            for i in start..n_rows {
                if i != r && self.bit(i, c) {
                    self.xor_into(i, r, c / 64);
                }
            }
            pivots.push(c);
        }
        pivots
    }
}

/// Row-major dense matrix over `F_p`.
struct ModRows {
    f: Fp,
    n_cols: usize,
    data: Vec<u32>,
}

impl ModRows {
    fn new(rows: &[Vec<(usize, u32)>], n_cols: usize, f: Fp) -> Self {
        let mut data = vec![0u32; n_cols * rows.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                data[i * n_cols + c] = v;
            }
        }
        ModRows { f, n_cols, data }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.n_cols + c]
    }

    fn swap(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.n_cols {
                self.data.swap(a * self.n_cols + c, b * self.n_cols + c);
            }
        }
    }

    fn eliminate(&mut self, n_rows: usize, full: bool) -> Vec<usize> {
        let n = self.n_cols;
        let p = u64::from(self.f.modulus());
        let mut pivots = Vec::new();
        for c in 0..n {
            let r = pivots.len();
            if r == n_rows {
                break;
            }
            let Some(piv) = (r..n_rows).find(|&i| self.at(i, c) != 0) else {
                continue;
            };
            self.swap(r, piv);
            let inv = self.f.inv(self.at(r, c));
            for k in c..n {
                self.data[r * n + k] = self.f.mul(self.data[r * n + k], inv);
            }
            let start = if full { 0 } else { r + 1 };
            for i in start..n_rows {
                let factor = self.at(i, c);
                if i == r || factor == 0 {
                    continue;
                }
                let neg = p - u64::from(factor);
                for k in c..n {
                    let src = self.data[r * n + k];
                    if src != 0 {
                        let x = &mut self.data[i * n + k];
                        *x = ((u64::from(*x) + neg * u64::from(src)) % p) as u32;
                    }
                }
            }
            pivots.push(c);
        }
        pivots
    }
}

/// Rank of the rows over `F_p`.
pub(crate) fn dense_rank(rows: &[Vec<(usize, u32)>], n_cols: usize, modulus: u32) -> usize {
    if rows.is_empty() || n_cols == 0 {
        return 0;
    }
    if modulus == 2 {
        BitRows::new(rows, n_cols).eliminate(rows.len(), n_cols, false).len()
    } else {
        ModRows::new(rows, n_cols, Fp::new(modulus)).eliminate(rows.len(), false).len()
    }
}

/// Fully reduced echelon form of the rows over `F_p`.
pub(crate) fn dense_rref(rows: &[Vec<(usize, u32)>], n_cols: usize, modulus: u32) -> Rref {
    let n_rows = rows.len();
    let (pivots, out) = if modulus == 2 {
        let mut b = BitRows::new(rows, n_cols);
        let pivots = b.eliminate(n_rows, n_cols, true);
        let out = (0..pivots.len())
            .map(|r| (0..n_cols).map(|c| u32::from(b.bit(r, c))).collect())
            .collect();
        (pivots, out)
    } else {
        let mut m = ModRows::new(rows, n_cols, Fp::new(modulus));
        let pivots = m.eliminate(n_rows, true);
        let out = (0..pivots.len())
            .map(|r| m.data[r * n_cols..(r + 1) * n_cols].to_vec())
            .collect();
        (pivots, out)
    };
    Rref { n_cols, modulus, pivots, rows: out }
}
