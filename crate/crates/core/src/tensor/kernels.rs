use rayon::prelude::*;

use super::{DataMatrix, DenseMatrix, SparseMatrix, RECONSTRUCTION_FLOOR};
use crate::error::{Error, Result};

// Columns handed to one rayon task at least; keeps scheduling overhead
// negligible on desk-sized problems.
const MIN_COLS_PER_TASK: usize = 8;

/// Dense product `a · b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(matmul_unchecked(a, b))
}

pub(crate) fn matmul_unchecked(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let m = a.rows();
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    if m > 0 {
        out.par_chunks_mut(m)
            .with_min_len(MIN_COLS_PER_TASK)
            .enumerate()
            .for_each(|(c, col)| {
                let coef = b.col(c);
                for (r, &s) in coef.iter().enumerate() {
                    for (o, &x) in col.iter_mut().zip(a.col(r)) {
                        *o += x * s;
                    }
                }
            });
    }
    DenseMatrix::from_raw(m, n, out)
}

/// `a^t · q` for dense or sparse `q`; entry (r, c) = Σ_m a[m, r] q[m, c].
pub fn transpose_product(a: &DenseMatrix, q: &DataMatrix) -> Result<DenseMatrix> {
    if a.rows() != q.rows() {
        return Err(Error::Dimension {
            op: "transpose_product",
            left: a.shape(),
            right: q.shape(),
        });
    }
    Ok(gram_on(a, q, q.values()))
}

/// `(w ⊙ w)^t · qbar`; entry (r, t) = Σ_n w_nr² qbar_nt.
pub fn weighted_gram(w: &DenseMatrix, qbar: &DataMatrix) -> Result<DenseMatrix> {
    if w.rows() != qbar.rows() {
        return Err(Error::Dimension {
            op: "weighted_gram",
            left: w.shape(),
            right: qbar.shape(),
        });
    }
    let squared = square(w);
    Ok(gram_on(&squared, qbar, qbar.values()))
}

/// `v ⊘ z` with the zero-entry convention: entries where `v = 0` are 0 and
/// `z` is floored before dividing. Sparse `v` keeps its pattern.
pub fn masked_ratio(v: &DataMatrix, z: &DenseMatrix) -> Result<DataMatrix> {
    masked_ratio_impl(v, z, false)
}

/// `v ⊘ (z ⊙ z)` with the same conventions as [`masked_ratio`].
pub fn masked_ratio_squared(v: &DataMatrix, z: &DenseMatrix) -> Result<DataMatrix> {
    masked_ratio_impl(v, z, true)
}

fn masked_ratio_impl(v: &DataMatrix, z: &DenseMatrix, squared: bool) -> Result<DataMatrix> {
    if v.shape() != z.shape() {
        return Err(Error::Dimension {
            op: "masked_ratio",
            left: v.shape(),
            right: z.shape(),
        });
    }
    let recon = gather_support(v, z);
    let values = if squared {
        ratio_squared_on(v, &recon)
    } else {
        ratio_on(v, &recon)
    };
    Ok(match v {
        DataMatrix::Dense(_) => {
            DataMatrix::Dense(DenseMatrix::from_raw(v.rows(), v.cols(), values))
        }
        DataMatrix::Sparse(s) => DataMatrix::Sparse(s.with_values(values)),
    })
}

/// Entries of a dense matrix at the storage positions of `data`.
pub(crate) fn gather_support(data: &DataMatrix, z: &DenseMatrix) -> Vec<f64> {
    match data {
        DataMatrix::Dense(_) => z.values().to_vec(),
        DataMatrix::Sparse(s) => {
            let mut out = Vec::with_capacity(s.nnz());
            for c in 0..s.cols() {
                let (rows, _) = s.col(c);
                out.extend(rows.iter().map(|&r| z.get(r, c)));
            }
            out
        }
    }
}

pub(crate) fn square(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_raw(
        m.rows(),
        m.cols(),
        m.values().iter().map(|v| v * v).collect(),
    )
}

#[inline]
fn ratio(x: f64, z: f64) -> f64 {
    if x > 0.0 {
        (x / z.max(RECONSTRUCTION_FLOOR)).min(f64::MAX)
    } else {
        0.0
    }
}

#[inline]
fn ratio_squared(x: f64, z: f64) -> f64 {
    if x > 0.0 {
        let zf = z.max(RECONSTRUCTION_FLOOR);
        (x / zf / zf).min(f64::MAX)
    } else {
        0.0
    }
}

/// Support-aligned `x ⊘ z`.
pub(crate) fn ratio_on(data: &DataMatrix, recon: &[f64]) -> Vec<f64> {
    debug_assert_eq!(recon.len(), data.support_len());
    data.values()
        .par_iter()
        .zip(recon.par_iter())
        .with_min_len(1024)
        .map(|(&x, &z)| ratio(x, z))
        .collect()
}

pub(crate) fn ratio_squared_on(data: &DataMatrix, recon: &[f64]) -> Vec<f64> {
    debug_assert_eq!(recon.len(), data.support_len());
    data.values()
        .par_iter()
        .zip(recon.par_iter())
        .with_min_len(1024)
        .map(|(&x, &z)| ratio_squared(x, z))
        .collect()
}

/// Reconstruction `basis · coef` evaluated at the storage positions of `data`.
pub(crate) fn reconstruct_on(
    data: &DataMatrix,
    basis: &DenseMatrix,
    coef: &DenseMatrix,
) -> Vec<f64> {
    match data {
        DataMatrix::Dense(_) => matmul_unchecked(basis, coef).into_values(),
        DataMatrix::Sparse(s) => reconstruct_sparse(s, basis, coef),
    }
}

fn reconstruct_sparse(s: &SparseMatrix, basis: &DenseMatrix, coef: &DenseMatrix) -> Vec<f64> {
    let rank = basis.cols();
    // row-major basis so each stored entry reads one contiguous row
    let basis_rows = basis.transpose();
    let mut out = vec![0.0; s.nnz()];
    let columns = split_by_lengths(&mut out, (0..s.cols()).map(|c| s.col_range(c).len()));
    columns
        .into_par_iter()
        .with_min_len(MIN_COLS_PER_TASK)
        .enumerate()
        .for_each(|(c, col)| {
            let (rows, _) = s.col(c);
            let h = coef.col(c);
            for (o, &m) in col.iter_mut().zip(rows) {
                let w = basis_rows.col(m);
                let mut acc = 0.0;
                for r in 0..rank {
                    acc += w[r] * h[r];
                }
                *o = acc;
            }
        });
    out
}

/// `basis^t · field` where `field` is aligned with the storage of `data`.
pub(crate) fn gram_on(basis: &DenseMatrix, data: &DataMatrix, field: &[f64]) -> DenseMatrix {
    let rank = basis.cols();
    let cols = data.cols();
    let mut out = vec![0.0; rank * cols];
    if rank == 0 {
        return DenseMatrix::from_raw(rank, cols, out);
    }
    match data {
        DataMatrix::Dense(d) => {
            let m = d.rows();
            out.par_chunks_mut(rank)
                .with_min_len(MIN_COLS_PER_TASK)
                .enumerate()
                .for_each(|(c, o)| {
                    let f = &field[c * m..(c + 1) * m];
                    for (r, slot) in o.iter_mut().enumerate() {
                        let b = basis.col(r);
                        let mut acc = 0.0;
                        for (x, y) in b.iter().zip(f) {
                            acc += x * y;
                        }
                        *slot = acc;
                    }
                });
        }
        DataMatrix::Sparse(s) => {
            let basis_rows = basis.transpose();
            out.par_chunks_mut(rank)
                .with_min_len(MIN_COLS_PER_TASK)
                .enumerate()
                .for_each(|(c, o)| {
                    let rng = s.col_range(c);
                    let rows = &s.row_indices()[rng.clone()];
                    for (&m, &f) in rows.iter().zip(&field[rng]) {
                        for (slot, &b) in o.iter_mut().zip(basis_rows.col(m)) {
                            *slot += b * f;
                        }
                    }
                });
        }
    }
    DenseMatrix::from_raw(rank, cols, out)
}

fn split_by_lengths(values: &mut [f64], lengths: impl Iterator<Item = usize>) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    let mut rest = values;
    for len in lengths {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(len);
        out.push(head);
        rest = tail;
    }
    out
}
