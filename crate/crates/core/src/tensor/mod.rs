//! Non-negative dense and sparse storage plus the product and element-wise
//! kernels the solvers are built from.
//!
//! Kernels that operate "on the support" of a data matrix take and return
//! plain value arrays aligned with that matrix's storage: the full
//! column-major array for dense data, the stored-entry array for sparse
//! data. Reconstructions and ratio matrices for sparse data therefore only
//! ever exist on the data's sparsity pattern.

mod dense;
mod kernels;
mod sparse;

use std::ops::Range;

pub use dense::DenseMatrix;
pub(crate) use kernels::{
    gather_support, gram_on, matmul_unchecked, ratio_on, ratio_squared_on, reconstruct_on, square,
};
pub use kernels::{masked_ratio, masked_ratio_squared, matmul, transpose_product, weighted_gram};
pub use sparse::SparseMatrix;

/// Guard applied to reconstruction entries before any division.
pub const RECONSTRUCTION_FLOOR: f64 = 1e-300;

/// A data matrix in either storage format.
#[derive(Debug, Clone, PartialEq)]
pub enum DataMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.rows(),
            DataMatrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.cols(),
            DataMatrix::Sparse(m) => m.cols(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, DataMatrix::Sparse(_))
    }

    /// Number of stored positions (all entries for dense data).
    pub fn support_len(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.values().len(),
            DataMatrix::Sparse(m) => m.nnz(),
        }
    }

    /// Positive entries.
    pub fn nnz(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.values().iter().filter(|&&v| v > 0.0).count(),
            DataMatrix::Sparse(m) => m.nnz(),
        }
    }

    /// Range of column `c` inside a support-aligned array.
    #[inline]
    pub fn col_range(&self, c: usize) -> Range<usize> {
        match self {
            DataMatrix::Dense(m) => c * m.rows()..(c + 1) * m.rows(),
            DataMatrix::Sparse(m) => m.col_range(c),
        }
    }

    /// Stored values in storage order.
    pub fn values(&self) -> &[f64] {
        match self {
            DataMatrix::Dense(m) => m.values(),
            DataMatrix::Sparse(m) => m.values(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            DataMatrix::Dense(m) => m.clone(),
            DataMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        match self {
            DataMatrix::Dense(m) => m.column_sums(),
            DataMatrix::Sparse(m) => m.column_sums(),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        match self {
            DataMatrix::Dense(m) => m.row_sums(),
            DataMatrix::Sparse(m) => m.row_sums(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.column_sums().iter().sum()
    }

    pub fn scale_columns(&mut self, scale: &[f64]) -> crate::Result<()> {
        match self {
            DataMatrix::Dense(m) => m.scale_columns(scale),
            DataMatrix::Sparse(m) => m.scale_columns(scale),
        }
    }

    pub fn scale_rows(&mut self, scale: &[f64]) -> crate::Result<()> {
        match self {
            DataMatrix::Dense(m) => m.scale_rows(scale),
            DataMatrix::Sparse(m) => m.scale_rows(scale),
        }
    }

    /// Transposed matrix and, for sparse data, the stored-entry permutation.
    pub fn transpose_with_permutation(&self) -> (DataMatrix, Option<Vec<usize>>) {
        match self {
            DataMatrix::Dense(m) => (DataMatrix::Dense(m.transpose()), None),
            DataMatrix::Sparse(m) => {
                let (t, perm) = m.transpose_with_permutation();
                (DataMatrix::Sparse(t), Some(perm))
            }
        }
    }

    pub fn densified(&self) -> DataMatrix {
        DataMatrix::Dense(self.to_dense())
    }
}

impl From<DenseMatrix> for DataMatrix {
    fn from(m: DenseMatrix) -> Self {
        DataMatrix::Dense(m)
    }
}

impl From<SparseMatrix> for DataMatrix {
    fn from(m: SparseMatrix) -> Self {
        DataMatrix::Sparse(m)
    }
}
