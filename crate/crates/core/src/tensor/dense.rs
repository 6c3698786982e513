use crate::error::{Error, Result};

/// Column-major dense matrix. Factors and data are non-negative; the signed
/// gradient quantities `a` are the only negative-valued instances.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a column-major value array, validating every entry.
    pub fn from_col_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                op: "from_col_major",
                left: (rows, cols),
                right: (values.len(), 1),
            });
        }
        for (k, &v) in values.iter().enumerate() {
            check_value(v, k % rows.max(1), k / rows.max(1))?;
        }
        Ok(Self { rows, cols, values })
    }

    /// Like [`DenseMatrix::from_col_major`] but accepts negative entries.
    pub fn from_col_major_signed(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                op: "from_col_major_signed",
                left: (rows, cols),
                right: (values.len(), 1),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue {
                row: k % rows.max(1),
                col: k / rows.max(1),
                value: values[k],
                reason: "not finite",
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from row slices; convenient for fixtures.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = vec![0.0; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::Dimension {
                    op: "from_rows",
                    left: (i, row.len()),
                    right: (0, ncols),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                check_value(v, i, j)?;
                values[j * nrows + i] = v;
            }
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            values,
        })
    }

    /// Unchecked constructor for kernel outputs that are non-negative by construction.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
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
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.rows + row]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[col * self.rows + row] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn col(&self, col: usize) -> &[f64] {
        &self.values[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, col: usize) -> &mut [f64] {
        let rows = self.rows;
        &mut self.values[col * rows..(col + 1) * rows]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.values.len()];
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[i * self.cols + j] = self.values[j * self.rows + i];
            }
        }
        DenseMatrix::from_raw(self.cols, self.rows, out)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| self.col(j).iter().sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (s, &v) in sums.iter_mut().zip(self.col(j)) {
                *s += v;
            }
        }
        sums
    }

    pub fn sum(&self) -> f64 {
        self.column_sums().iter().sum()
    }

    /// Multiplies column `j` by `scale[j]`.
    pub fn scale_columns(&mut self, scale: &[f64]) -> Result<()> {
        check_scale(scale, self.cols, "scale_columns", self.shape())?;
        for (j, &s) in scale.iter().enumerate() {
            self.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        Ok(())
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&mut self, scale: &[f64]) -> Result<()> {
        check_scale(scale, self.rows, "scale_rows", self.shape())?;
        let rows = self.rows;
        for column in self.values.chunks_mut(rows.max(1)) {
            for (v, &s) in column.iter_mut().zip(scale) {
                *v *= s;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_value(v: f64, row: usize, col: usize) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidValue {
            row,
            col,
            value: v,
            reason: "not finite",
        });
    }
    if v < 0.0 {
        return Err(Error::InvalidValue {
            row,
            col,
            value: v,
            reason: "negative",
        });
    }
    Ok(())
}

pub(crate) fn check_scale(
    scale: &[f64],
    expected: usize,
    op: &'static str,
    shape: (usize, usize),
) -> Result<()> {
    if scale.len() != expected {
        return Err(Error::Dimension {
            op,
            left: shape,
            right: (scale.len(), 1),
        });
    }
    match scale
        .iter()
        .enumerate()
        .find(|(_, &s)| !(s > 0.0 && s.is_finite()))
    {
        Some((index, &value)) => Err(Error::NonPositiveScale { index, value }),
        None => Ok(()),
    }
}
