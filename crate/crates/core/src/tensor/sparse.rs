use std::ops::Range;

use super::dense::{check_scale, DenseMatrix};
use crate::error::{Error, Result};

/// Compressed sparse column matrix holding strictly positive entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            col_ptr: vec![0; cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Validates raw CSC arrays.
    pub fn from_csc(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 {
            return Err(Error::SparseStructure(format!(
                "column pointer array of length {} for {cols} columns",
                col_ptr.len()
            )));
        }
        if row_idx.len() != values.len() || col_ptr[cols] != values.len() {
            return Err(Error::SparseStructure(format!(
                "nnz mismatch: last pointer {}, {} row indices, {} values",
                col_ptr[cols],
                row_idx.len(),
                values.len()
            )));
        }
        for c in 0..cols {
            if col_ptr[c] > col_ptr[c + 1] {
                return Err(Error::SparseStructure(format!(
                    "column pointers decrease at column {c}"
                )));
            }
            let rng = col_ptr[c]..col_ptr[c + 1];
            let mut prev = None;
            for k in rng {
                let r = row_idx[k];
                if r >= rows {
                    return Err(Error::SparseStructure(format!(
                        "row index {r} out of bounds for {rows} rows"
                    )));
                }
                if prev.is_some_and(|p| p >= r) {
                    return Err(Error::SparseStructure(format!(
                        "row indices not strictly increasing in column {c}"
                    )));
                }
                prev = Some(r);
                let v = values[k];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidValue {
                        row: r,
                        col: c,
                        value: v,
                        reason: "stored sparse values must be finite and positive",
                    });
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Assembles from (row, col, value) triplets. Duplicates are summed and
    /// entries that sum to zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::SparseStructure(format!(
                    "entry ({r}, {c}) out of bounds for {rows}x{cols}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidValue {
                    row: r,
                    col: c,
                    value: v,
                    reason: "negative or non-finite",
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (c, r));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut col_of = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_of.push(c);
                last = Some((r, c));
            }
        }
        let mut kept_rows = Vec::with_capacity(row_idx.len());
        let mut kept_vals = Vec::with_capacity(values.len());
        for ((r, v), c) in row_idx.into_iter().zip(values).zip(col_of) {
            if v > 0.0 {
                kept_rows.push(r);
                kept_vals.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx: kept_rows,
            values: kept_vals,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut col_ptr = Vec::with_capacity(m.cols() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in 0..m.cols() {
            for (r, &v) in m.col(c).iter().enumerate() {
                if v > 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(values.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            let (rows, vals) = self.col(c);
            for (&r, &v) in rows.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn col_range(&self, col: usize) -> Range<usize> {
        self.col_ptr[col]..self.col_ptr[col + 1]
    }

    /// Row indices and values of one column.
    #[inline]
    pub fn col(&self, col: usize) -> (&[usize], &[f64]) {
        let r = self.col_range(col);
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Same sparsity pattern with new values; used for kernels whose output
    /// keeps the input pattern.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            rows: self.rows,
            cols: self.cols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        }
    }

    /// Transpose plus the map from each stored entry to its position in the
    /// transpose.
    pub fn transpose_with_permutation(&self) -> (SparseMatrix, Vec<usize>) {
        let mut counts = vec![0usize; self.rows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for r in 0..self.rows {
            counts[r + 1] += counts[r];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let nnz = self.nnz();
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut perm = vec![0usize; nnz];
        for c in 0..self.cols {
            for k in self.col_range(c) {
                let r = self.row_idx[k];
                let dst = next[r];
                next[r] += 1;
                row_idx[dst] = c;
                values[dst] = self.values[k];
                perm[k] = dst;
            }
        }
        (
            SparseMatrix {
                rows: self.cols,
                cols: self.rows,
                col_ptr,
                row_idx,
                values,
            },
            perm,
        )
    }

    pub fn transpose(&self) -> SparseMatrix {
        self.transpose_with_permutation().0
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|c| self.col(c).1.iter().sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        // accumulate in column order so results match the dense kernel bit for bit
        let mut sums = vec![0.0; self.rows];
        for (&r, &v) in self.row_idx.iter().zip(&self.values) {
            sums[r] += v;
        }
        sums
    }

    pub fn scale_columns(&mut self, scale: &[f64]) -> Result<()> {
        check_scale(scale, self.cols, "scale_columns", self.shape())?;
        for (c, &s) in scale.iter().enumerate() {
            let rng = self.col_range(c);
            self.values[rng].iter_mut().for_each(|v| *v *= s);
        }
        Ok(())
    }

    pub fn scale_rows(&mut self, scale: &[f64]) -> Result<()> {
        check_scale(scale, self.rows, "scale_rows", self.shape())?;
        for (v, &r) in self.values.iter_mut().zip(&self.row_idx) {
            *v *= scale[r];
        }
        Ok(())
    }
}
