//! Matrix files, convergence logs and convergence plots.

mod csv;
mod log;
mod matrix_market;
mod svg;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::tensor::DataMatrix;

pub use self::csv::{parse_csv, write_csv};
pub use self::log::{format_convergence_log, write_convergence_log, TimingColumn};
pub use self::matrix_market::{
    parse_matrix_market, write_matrix_market_array, write_matrix_market_coordinate,
};
pub use self::svg::{render_svg_plot, write_svg_plot, PlotRun};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },

    #[error("line {line}: unsupported MatrixMarket variant '{variant}'")]
    Unsupported { line: usize, variant: String },

    #[error("line {line}: invalid number '{token}'")]
    InvalidNumber { line: usize, token: String },

    #[error("line {line}: entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("line {line}: negative value {value}")]
    NegativeValue { line: usize, value: f64 },

    #[error("declared {declared} entries but found {found}")]
    NnzMismatch { declared: usize, found: usize },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
}

/// On-disk matrix encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarketCoordinate,
    MatrixMarketArray,
    Csv,
}

impl MatrixFormat {
    /// `.csv` → CSV; anything else → MatrixMarket, coordinate for sparse data
    /// and array for dense data.
    pub fn for_path(path: &Path, data: &DataMatrix) -> Self {
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        match (is_csv, data) {
            (true, _) => MatrixFormat::Csv,
            (false, DataMatrix::Sparse(_)) => MatrixFormat::MatrixMarketCoordinate,
            (false, DataMatrix::Dense(_)) => MatrixFormat::MatrixMarketArray,
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_value(token: &str, line: usize) -> Result<f64, FormatError> {
    let value: f64 = token.parse().map_err(|_| FormatError::InvalidNumber {
        line,
        token: token.to_string(),
    })?;
    if !value.is_finite() {
        return Err(FormatError::InvalidNumber {
            line,
            token: token.to_string(),
        });
    }
    if value < 0.0 {
        return Err(FormatError::NegativeValue { line, value });
    }
    Ok(value)
}

/// Reads a MatrixMarket file (by its banner) or a CSV file.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DataMatrix, FormatError> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let is_mm = reader.fill_buf()?.starts_with(b"%%MatrixMarket");
    if is_mm {
        parse_matrix_market(reader)
    } else {
        parse_csv(reader).map(DataMatrix::Dense)
    }
}

pub fn write_matrix(
    m: &DataMatrix,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<(), FormatError> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    match format {
        MatrixFormat::MatrixMarketCoordinate => write_matrix_market_coordinate(m, &mut out)?,
        MatrixFormat::MatrixMarketArray => write_matrix_market_array(m, &mut out)?,
        MatrixFormat::Csv => write_csv(&m.to_dense(), &mut out)?,
    }
    out.flush()?;
    Ok(())
}
