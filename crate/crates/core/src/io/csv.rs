use std::io::{BufRead, Write};

use super::{format_value, parse_value, FormatError};
use crate::tensor::DenseMatrix;

/// Parses comma-separated rows. Blank lines and `#` comments are skipped.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<DenseMatrix, FormatError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row = text
            .split(',')
            .map(|tok| parse_value(tok.trim(), line_no))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(FormatError::RaggedRow {
                    line: line_no,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(rows.len() * n_cols);
    for c in 0..n_cols {
        values.extend(rows.iter().map(|r| r[c]));
    }
    Ok(DenseMatrix::from_col_major(rows.len(), n_cols, values)
        .expect("values validated while parsing"))
}

pub fn write_csv<W: Write>(m: &DenseMatrix, out: &mut W) -> std::io::Result<()> {
    let mut line = String::new();
    for r in 0..m.rows() {
        line.clear();
        for c in 0..m.cols() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&format_value(m.get(r, c)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_in_order() {
        let m = parse_csv("# header\n1, 2,3\n\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 2), 3.0);
    }

    #[test]
    fn ragged_and_negative_rows_fail() {
        assert!(matches!(
            parse_csv("1,2\n3\n".as_bytes()),
            Err(FormatError::RaggedRow {
                line: 2,
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            parse_csv("1,-2\n".as_bytes()),
            Err(FormatError::NegativeValue { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("1,x\n".as_bytes()),
            Err(FormatError::InvalidNumber { .. })
        ));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let m = DenseMatrix::from_rows(&[[0.1, 1e-300], [7.0, 1.0 / 7.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert_eq!(parse_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn empty_input_is_empty_matrix() {
        assert_eq!(parse_csv("".as_bytes()).unwrap().shape(), (0, 0));
    }
}
