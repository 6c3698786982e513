use std::io::{BufRead, Write};

use super::{format_value, parse_value, FormatError};
use crate::tensor::{DataMatrix, DenseMatrix, SparseMatrix};

/// Largest accepted row or column count (the `int` range of the reference
/// MatrixMarket I/O routines).
pub const MAX_DIMENSION: usize = i32::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

fn parse_banner(text: &str, line: usize) -> Result<(Layout, Field), FormatError> {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(FormatError::MalformedHeader {
            line,
            message: format!(
                "expected '%%MatrixMarket matrix <layout> <field> <symmetry>', got '{text}'"
            ),
        });
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => {
            return Err(FormatError::Unsupported {
                line,
                variant: other.to_string(),
            })
        }
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => {
            return Err(FormatError::Unsupported {
                line,
                variant: other.to_string(),
            })
        }
    };
    if tokens[4] != "general" {
        return Err(FormatError::Unsupported {
            line,
            variant: tokens[4].clone(),
        });
    }
    Ok((layout, field))
}

fn parse_index(token: Option<&str>, line: usize) -> Result<usize, FormatError> {
    let token = token.ok_or_else(|| FormatError::MalformedHeader {
        line,
        message: "missing field".into(),
    })?;
    token.parse().map_err(|_| FormatError::InvalidNumber {
        line,
        token: token.to_string(),
    })
}

/// Parses MatrixMarket `coordinate` (→ sparse, duplicates summed) or `array`
/// (→ dense) content with a `general` real, integer or pattern field.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<DataMatrix, FormatError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (banner_line, banner) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => {
            return Err(FormatError::MalformedHeader {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let (layout, field) = parse_banner(&banner, banner_line)?;

    let mut size: Option<(usize, Vec<usize>)> = None;
    let mut triplets = Vec::new();
    let mut array_values = Vec::new();
    let mut found = 0usize;
    for (line_no, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let Some((_, dims)) = &size else {
            let expected = if layout == Layout::Coordinate { 3 } else { 2 };
            let mut dims: Vec<usize> = (0..expected)
                .map(|_| parse_index(tokens.next(), line_no))
                .collect::<Result<_, _>>()?;
            if tokens.next().is_some() {
                return Err(FormatError::MalformedHeader {
                    line: line_no,
                    message: "too many fields in size line".into(),
                });
            }
            if dims[..2].iter().any(|&d| d > MAX_DIMENSION) {
                return Err(FormatError::MalformedHeader {
                    line: line_no,
                    message: format!("dimension above {MAX_DIMENSION}"),
                });
            }
            if layout == Layout::Array {
                let count =
                    dims[0]
                        .checked_mul(dims[1])
                        .ok_or_else(|| FormatError::MalformedHeader {
                            line: line_no,
                            message: "entry count overflows".into(),
                        })?;
                dims.push(count);
            }
            size = Some((line_no, dims));
            continue;
        };
        let (rows, cols) = (dims[0], dims[1]);
        found += 1;
        match layout {
            Layout::Coordinate => {
                let declared = dims[2];
                if found > declared {
                    return Err(FormatError::NnzMismatch { declared, found });
                }
                let i = parse_index(tokens.next(), line_no)?;
                let j = parse_index(tokens.next(), line_no)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(FormatError::IndexOutOfBounds {
                        line: line_no,
                        row: i,
                        col: j,
                        rows,
                        cols,
                    });
                }
                let value = match field {
                    Field::Pattern => 1.0,
                    _ => {
                        let tok = tokens.next().ok_or(FormatError::RaggedRow {
                            line: line_no,
                            expected: 3,
                            found: 2,
                        })?;
                        parse_value(tok, line_no)?
                    }
                };
                if tokens.next().is_some() {
                    return Err(FormatError::RaggedRow {
                        line: line_no,
                        expected: 3,
                        found: text.split_whitespace().count(),
                    });
                }
                triplets.push((i - 1, j - 1, value));
            }
            Layout::Array => {
                let declared = dims[2];
                if found > declared {
                    return Err(FormatError::NnzMismatch { declared, found });
                }
                let tok = tokens.next().expect("non-empty line has a token");
                if tokens.next().is_some() {
                    return Err(FormatError::RaggedRow {
                        line: line_no,
                        expected: 1,
                        found: text.split_whitespace().count(),
                    });
                }
                array_values.push(parse_value(tok, line_no)?);
            }
        }
    }

    let Some((_, dims)) = size else {
        return Err(FormatError::MalformedHeader {
            line: banner_line + 1,
            message: "missing size line".into(),
        });
    };
    let (rows, cols) = (dims[0], dims[1]);
    match layout {
        Layout::Coordinate => {
            if found != dims[2] {
                return Err(FormatError::NnzMismatch {
                    declared: dims[2],
                    found,
                });
            }
            let m = SparseMatrix::from_triplets(rows, cols, &triplets)
                .expect("entries validated while parsing");
            Ok(DataMatrix::Sparse(m))
        }
        Layout::Array => {
            if found != dims[2] {
                return Err(FormatError::NnzMismatch {
                    declared: dims[2],
                    found,
                });
            }
            let m = DenseMatrix::from_col_major(rows, cols, array_values)
                .expect("entries validated while parsing");
            Ok(DataMatrix::Dense(m))
        }
    }
}

/// Coordinate layout, column-major entry order, explicit zeros omitted.
pub fn write_matrix_market_coordinate<W: Write>(
    m: &DataMatrix,
    out: &mut W,
) -> std::io::Result<()> {
    let sparse = match m {
        DataMatrix::Sparse(s) => std::borrow::Cow::Borrowed(s),
        DataMatrix::Dense(d) => std::borrow::Cow::Owned(SparseMatrix::from_dense(d)),
    };
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", sparse.rows(), sparse.cols(), sparse.nnz())?;
    for c in 0..sparse.cols() {
        let (rows, vals) = sparse.col(c);
        for (&r, &v) in rows.iter().zip(vals) {
            writeln!(out, "{} {} {}", r + 1, c + 1, format_value(v))?;
        }
    }
    Ok(())
}

/// Array layout, column-major.
pub fn write_matrix_market_array<W: Write>(m: &DataMatrix, out: &mut W) -> std::io::Result<()> {
    let dense = m.to_dense();
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", dense.rows(), dense.cols())?;
    for &v in dense.values() {
        writeln!(out, "{}", format_value(v))?;
    }
    Ok(())
}
