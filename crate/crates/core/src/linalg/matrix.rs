use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

use super::field::FieldSpec;

/// A sparse matrix over a prime field, stored row by row with columns sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    field: FieldSpec,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<u32>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triples in any order.
    ///
    /// Values are taken modulo the field size and must not vanish; repeated
    /// positions are rejected.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        field: FieldSpec,
        entries: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let p = u64::from(field.modulus());
        let mut list: Vec<(usize, usize, u32)> = Vec::new();
        for (r, c, v) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside a {n_rows} x {n_cols} matrix"
                )));
            }
            let v = v % p;
            if v == 0 {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) is zero in the field")));
            }
            list.push((r, c, v as u32));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::InvalidArgument(format!("duplicate entry at ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self::from_sorted(n_rows, n_cols, field, list))
    }

    /// Like [`SparseMatrix::new`] but sums values at repeated positions and
    /// drops the ones that cancel.
    pub fn summing(
        n_rows: usize,
        n_cols: usize,
        field: FieldSpec,
        entries: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let p = u64::from(field.modulus());
        let mut list: Vec<(usize, usize, u64)> = entries.into_iter().collect();
        list.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, u64)> = Vec::with_capacity(list.len());
        for (r, c, v) in list {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 = (last.2 + v % p) % p,
                _ => merged.push((r, c, v % p)),
            }
        }
        Self::new(n_rows, n_cols, field, merged.into_iter().filter(|e| e.2 != 0))
    }

    fn from_sorted(n_rows: usize, n_cols: usize, field: FieldSpec, list: Vec<(usize, usize, u32)>) -> Self {
        let mut row_start = vec![0usize; n_rows + 1];
        for &(r, _, _) in &list {
            row_start[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_start[i + 1] += row_start[i];
        }
        let (cols, vals) = list.into_iter().map(|(_, c, v)| (c, v)).unzip();
        SparseMatrix { n_rows, n_cols, field, row_start, cols, vals }
    }

    pub fn zeros(n_rows: usize, n_cols: usize, field: FieldSpec) -> Self {
        Self::from_sorted(n_rows, n_cols, field, Vec::new())
    }

    pub fn identity(n: usize, field: FieldSpec) -> Self {
        Self::from_sorted(n, n, field, (0..n).map(|i| (i, i, 1)).collect())
    }

    /// Dense constructor; zero entries are skipped.
    pub fn from_dense(field: FieldSpec, rows: &[Vec<u64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidArgument("ragged dense rows".into()));
        }
        let p = u64::from(field.modulus());
        let entries = rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |&(_, &v)| v % p != 0)
                .map(move |(j, &v)| (i, j, v))
        });
        Self::new(rows.len(), n_cols, field, entries)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Nonzeros of row `i` as `(col, value)` pairs in column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let span = self.row_start[i]..self.row_start[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row_start[i + 1] - self.row_start[i]
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.n_cols];
        for &c in &self.cols {
            w[c] += 1;
        }
        w
    }

    /// All nonzeros in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let span = self.row_start[i]..self.row_start[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.entries() {
            out[i][j] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut list: Vec<_> = self.entries().map(|(i, j, v)| (j, i, v)).collect();
        list.sort_unstable();
        Self::from_sorted(self.n_cols, self.n_rows, self.field, list)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<Self> {
        if self.n_cols != other.n_cols || self.field != other.field {
            return Err(Error::InvalidArgument("vstack needs equal column counts and fields".into()));
        }
        let offset = self.n_rows;
        let list = self
            .entries()
            .chain(other.entries().map(|(i, j, v)| (i + offset, j, v)))
            .collect();
        Ok(Self::from_sorted(self.n_rows + other.n_rows, self.n_cols, self.field, list))
    }

    /// Appends one row per column index, each holding a single one there.
    pub fn with_unit_rows(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.n_cols) {
            return Err(Error::InvalidArgument(format!("column {c} out of range")));
        }
        let offset = self.n_rows;
        let list = self
            .entries()
            .chain(columns.iter().enumerate().map(|(t, &c)| (offset + t, c, 1)))
            .collect();
        Ok(Self::from_sorted(self.n_rows + columns.len(), self.n_cols, self.field, list))
    }

    /// Keeps the columns for which `keep` holds, renumbered in order.
    pub fn select_columns(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut map = vec![usize::MAX; self.n_cols];
        let mut next = 0;
        for (c, slot) in map.iter_mut().enumerate() {
            if keep(c) {
                *slot = next;
                next += 1;
            }
        }
        let list = self
            .entries()
            .filter(|&(_, j, _)| map[j] != usize::MAX)
            .map(|(i, j, v)| (i, map[j], v))
            .collect();
        Self::from_sorted(self.n_rows, next, self.field, list)
    }

    /// Deletes the listed columns.
    pub fn delete_columns(&self, cols: &[usize]) -> Self {
        let mut drop = vec![false; self.n_cols];
        for &c in cols {
            if c < self.n_cols {
                drop[c] = true;
            }
        }
        self.select_columns(|c| !drop[c])
    }

    /// `[[self, 0], [lower_left, lower_right]]`.
    pub fn block_lower(&self, lower_left: &SparseMatrix, lower_right: &SparseMatrix) -> Result<Self> {
        if lower_left.n_cols != self.n_cols
            || lower_left.n_rows != lower_right.n_rows
            || lower_left.field != self.field
            || lower_right.field != self.field
        {
            return Err(Error::InvalidArgument("block shapes or fields do not conform".into()));
        }
        let (m, n) = (self.n_rows, self.n_cols);
        let list = self
            .entries()
            .chain((0..lower_left.n_rows).flat_map(|i| {
                lower_left
                    .row(i)
                    .map(move |(j, v)| (m + i, j, v))
                    .chain(lower_right.row(i).map(move |(j, v)| (m + i, n + j, v)))
            }))
            .collect();
        Ok(Self::from_sorted(m + lower_left.n_rows, n + lower_right.n_cols, self.field, list))
    }

    /// Renders the `SPARSE` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("SPARSE {} {} {}\n", self.n_rows, self.n_cols, self.field.modulus());
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{i} {j} {v}");
        }
        out
    }

    /// Parses the `SPARSE` text format. Moduli of at least `2^16` are read as
    /// the rational proxy.
    pub fn read_text(reader: impl BufRead) -> Result<Self> {
        let mut header: Option<(usize, usize, FieldSpec)> = None;
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: lineno, msg };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if header.is_none() {
                if fields.len() != 4 || fields[0] != "SPARSE" {
                    return Err(parse_err("expected `SPARSE n_rows n_cols q`".into()));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(format!("{s:?}: {e}")));
                let q: u32 = fields[3].parse().map_err(|e| parse_err(format!("{:?}: {e}", fields[3])))?;
                let field = if q < super::field::MAX_PRIME_FIELD {
                    FieldSpec::prime(q)
                } else {
                    FieldSpec::rational_proxy(q)
                }
                .map_err(|e| parse_err(e.to_string()))?;
                header = Some((num(fields[1])?, num(fields[2])?, field));
                continue;
            }
            if fields.len() != 3 {
                return Err(parse_err("expected `row col value`".into()));
            }
            let mut nums = [0u64; 3];
            for (slot, s) in nums.iter_mut().zip(&fields) {
                *slot = s.parse().map_err(|e| parse_err(format!("{s:?}: {e}")))?;
            }
            let (_, _, field) = header.expect("header parsed");
            if nums[2] == 0 || nums[2] >= u64::from(field.modulus()) {
                return Err(parse_err(format!("value {} outside [1, q-1]", nums[2])));
            }
            entries.push((nums[0] as usize, nums[1] as usize, nums[2]));
        }
        let (r, c, field) = header.ok_or_else(|| Error::Parse { line: 0, msg: "missing header".into() })?;
        Self::new(r, c, field, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> FieldSpec {
        FieldSpec::prime(q).unwrap()
    }

    #[test]
    fn validation() {
        assert!(SparseMatrix::new(2, 2, gf(3), [(0, 0, 1), (0, 0, 2)]).is_err());
        assert!(SparseMatrix::new(2, 2, gf(3), [(0, 0, 3)]).is_err());
        assert!(SparseMatrix::new(2, 2, gf(3), [(2, 0, 1)]).is_err());
        let m = SparseMatrix::summing(2, 2, gf(3), [(0, 0, 1), (0, 0, 2), (1, 1, 1), (1, 1, 1)]).unwrap();
        assert_eq!(m.to_dense(), vec![vec![0, 0], vec![0, 2]]);
    }

    #[test]
    fn reshaping() {
        let m = SparseMatrix::from_dense(gf(5), &[vec![1, 0, 2], vec![0, 3, 4]]).unwrap();
        assert_eq!(m.transpose().to_dense(), vec![vec![1, 0], vec![0, 3], vec![2, 4]]);
        assert_eq!(m.delete_columns(&[1]).to_dense(), vec![vec![1, 2], vec![0, 4]]);
        let s = m.vstack(&m).unwrap();
        assert_eq!(s.n_rows(), 4);
        assert_eq!(s.get(3, 2), 4);
        let p = m.with_unit_rows(&[2, 2]).unwrap();
        assert_eq!(p.to_dense()[2..], [vec![0, 0, 1], vec![0, 0, 1]]);
        let b = SparseMatrix::from_dense(gf(5), &[vec![0, 1, 0]]).unwrap();
        let c = SparseMatrix::from_dense(gf(5), &[vec![2, 0]]).unwrap();
        let blk = m.block_lower(&b, &c).unwrap();
        assert_eq!(
            blk.to_dense(),
            vec![vec![1, 0, 2, 0, 0], vec![0, 3, 4, 0, 0], vec![0, 1, 0, 2, 0]]
        );
        assert_eq!(m.col_weights(), vec![1, 1, 2]);
    }

    #[test]
    fn text_round_trip() {
        let m = SparseMatrix::from_dense(gf(7), &[vec![1, 0, 6], vec![0, 0, 0], vec![3, 2, 0]]).unwrap();
        let text = m.to_text();
        let back = SparseMatrix::read_text(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        let with_comments = "# header next\n\nSPARSE 1 2 3  # trailing\n0 1 2\n";
        let r = SparseMatrix::read_text(with_comments.as_bytes()).unwrap();
        assert_eq!(r.to_dense(), vec![vec![0, 2]]);
    }

    #[test]
    fn text_errors() {
        for bad in ["SPARSE 1 1 4\n", "SPARSE 1 1 3\n0 0 3\n", "nope\n", "SPARSE 1 1 3\n0 0\n", ""] {
            assert!(SparseMatrix::read_text(bad.as_bytes()).is_err(), "{bad:?}");
        }
        match SparseMatrix::read_text("SPARSE 1 1 3\n\n0 x 1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
