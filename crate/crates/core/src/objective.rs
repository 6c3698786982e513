//! Generalized KL divergence, the regularized objective, and the per-column
//! (per-row) partial divergences used to choose between candidate updates.
//!
//! Entries with `v = 0` contribute only their reconstruction `z`; the log
//! term is evaluated on the support of `v` alone.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{DataMatrix, DenseMatrix};

/// Objective value split into its divergence and penalty parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub kl: f64,
    pub reg_w: f64,
    pub reg_h: f64,
    pub total: f64,
}

impl ObjectiveValue {
    pub fn new(kl: f64, reg_w: f64, reg_h: f64) -> Self {
        Self {
            kl,
            reg_w,
            reg_h,
            total: kl + reg_w + reg_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// One score per column (coefficient update).
    Columns,
    /// One score per row (basis update).
    Rows,
}

/// Partial divergences along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionScores {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl SelectionScores {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Contribution of one entry with `v > 0`.
#[inline]
pub(crate) fn entry_term(x: f64, q: f64, z: f64) -> f64 {
    x * q.ln() - x + z
}

/// `Σ v log(v/z) − Σ v + Σ z`.
pub fn kl_divergence(v: &DataMatrix, z: &DenseMatrix) -> Result<f64> {
    Ok(partial_from_recon(v, z, Axis::Columns)?.total())
}

/// Divergence plus `ρ Σ w + λ Σ h`.
pub fn regularized_objective(
    v: &DataMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    rho: f64,
    lambda: f64,
) -> Result<ObjectiveValue> {
    let z = crate::tensor::matmul(w, h)?;
    let kl = kl_divergence(v, &z)?;
    Ok(ObjectiveValue::new(kl, rho * w.sum(), lambda * h.sum()))
}

/// Per-column or per-row divergence of a candidate reconstruction `z` whose
/// ratio matrix is `q = v ⊘ z`.
pub fn partial_divergence(
    v: &DataMatrix,
    q: &DataMatrix,
    z: &DenseMatrix,
    axis: Axis,
) -> Result<SelectionScores> {
    if v.shape() != z.shape() || v.shape() != q.shape() || v.support_len() != q.support_len() {
        return Err(Error::Dimension {
            op: "partial_divergence",
            left: v.shape(),
            right: z.shape(),
        });
    }
    let (rows, cols) = v.shape();
    let mut values = vec![
        0.0;
        match axis {
            Axis::Columns => cols,
            Axis::Rows => rows,
        }
    ];
    let mut bucket = |r: usize, c: usize, x: f64| match axis {
        Axis::Columns => values[c] += x,
        Axis::Rows => values[r] += x,
    };
    match v {
        DataMatrix::Dense(d) => {
            for c in 0..cols {
                for r in 0..rows {
                    let x = d.get(r, c);
                    let zz = z.get(r, c);
                    let term = if x > 0.0 {
                        entry_term(x, q.values()[c * rows + r], zz)
                    } else {
                        zz
                    };
                    bucket(r, c, term);
                }
            }
        }
        DataMatrix::Sparse(s) => {
            for c in 0..cols {
                let rng = s.col_range(c);
                let mut k = rng.start;
                for r in 0..rows {
                    let zz = z.get(r, c);
                    if k < rng.end && s.row_indices()[k] == r {
                        bucket(r, c, entry_term(s.values()[k], q.values()[k], zz));
                        k += 1;
                    } else {
                        bucket(r, c, zz);
                    }
                }
            }
        }
    }
    Ok(SelectionScores { axis, values })
}

fn partial_from_recon(v: &DataMatrix, z: &DenseMatrix, axis: Axis) -> Result<SelectionScores> {
    if v.shape() != z.shape() {
        return Err(Error::Dimension {
            op: "kl_divergence",
            left: v.shape(),
            right: z.shape(),
        });
    }
    let q = crate::tensor::masked_ratio(v, z)?;
    partial_divergence(v, &q, z, axis)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }

    /// `self − other`, subtracting the leading parts first.
    fn minus(self, other: CompensatedSum) -> f64 {
        (self.sum - other.sum) + (self.comp - other.comp)
    }
}

/// Column sums of `basis · coef` from the basis column sums.
pub(crate) fn recon_col_sums(basis_sums: &[f64], coef: &DenseMatrix) -> Vec<f64> {
    (0..coef.cols())
        .map(|c| {
            let mut acc = CompensatedSum::default();
            for (h, s) in coef.col(c).iter().zip(basis_sums) {
                acc.add(h * s);
            }
            acc.value()
        })
        .collect()
}

/// Per-column divergence on support-aligned fields.
///
/// Only positive data entries are visited. A column with zero entries gets
/// its off-support mass as `recon_col_sums[c]` minus the on-support mass, so
/// a sparse matrix and its densified copy score bit-identically.
pub(crate) fn column_divergence_on(
    data: &DataMatrix,
    ratio: &[f64],
    recon: &[f64],
    recon_col_sums: &[f64],
) -> Vec<f64> {
    let values = data.values();
    let rows = data.rows();
    (0..data.cols())
        .into_par_iter()
        .with_min_len(8)
        .map(|c| {
            let mut terms = CompensatedSum::default();
            let mut on_support = CompensatedSum::default();
            let mut support = 0usize;
            for k in data.col_range(c) {
                let x = values[k];
                if x > 0.0 {
                    terms.add(entry_term(x, ratio[k], recon[k]));
                    on_support.add(recon[k]);
                    support += 1;
                }
            }
            let mut total = terms.value();
            if support < rows {
                let mut full = CompensatedSum::default();
                full.add(recon_col_sums[c]);
                total += full.minus(on_support);
            }
            total
        })
        .collect()
}
