//! Compressed sparse row storage.

use crate::error::{GelError, Result};

/// Square or rectangular CSR matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
}

/// Unordered (row, col, value) triplets; duplicates are summed on finalization.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        self.entries.push((r, c, v));
    }

    /// Adds `scale * a` with its (0,0) entry at (row_off, col_off).
    pub fn add_block(&mut self, a: &SparseOperator, row_off: usize, col_off: usize, scale: f64) {
        for r in 0..a.n_rows {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                self.entries.push((r + row_off, a.col_idx[k] + col_off, scale * a.values[k]));
            }
        }
    }

    /// Adds `scale * aᵀ` with its (0,0) entry at (row_off, col_off).
    pub fn add_block_transpose(&mut self, a: &SparseOperator, row_off: usize, col_off: usize, scale: f64) {
        for r in 0..a.n_rows {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                self.entries.push((a.col_idx[k] + row_off, r + col_off, scale * a.values[k]));
            }
        }
    }

    pub fn finalize(mut self, symmetric: bool) -> SparseOperator {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { n_rows: self.n_rows, n_cols: self.n_cols, row_ptr, col_idx, values, symmetric }
    }
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        SparseOperator {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map(Vec::len).unwrap_or(0);
        let mut t = Triplets::new(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        let m = t.finalize(false);
        let sym = m.is_symmetric(0.0);
        SparseOperator { symmetric: sym, ..m }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// yᵀAx.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        y.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut t = Triplets::new(self.n_cols, self.n_rows);
        t.add_block_transpose(self, 0, 0, 1.0);
        t.finalize(self.symmetric)
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.n_rows, self.n_cols);
        t.add_block(self, 0, 0, 1.0);
        t
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SparseOperator, s: f64) -> Result<SparseOperator> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(GelError::DimensionMismatch(format!(
                "{}x{} + {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut t = self.to_triplets();
        t.add_block(other, 0, 0, s);
        Ok(t.finalize(self.symmetric && other.symmetric))
    }

    pub fn scaled(&self, s: f64) -> SparseOperator {
        SparseOperator { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.n_rows).all(|r| self.row(r).all(|(c, v)| (v - self.get(c, r)).abs() <= tol * scale))
    }

    /// Removes stored zeros.
    pub fn pruned(&self) -> SparseOperator {
        let mut t = Triplets::new(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                if v != 0.0 {
                    t.push(r, c, v);
                }
            }
        }
        t.finalize(self.symmetric)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|r| self.get(r, r)).collect()
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
