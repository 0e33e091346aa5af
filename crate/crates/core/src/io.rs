//! Dense CSV matrices and JSON documents.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), enough for an
//! exact `f64` round trip.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Matrix;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv<W: Write>(mut out: W, m: &Matrix) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_matrix_csv(&mut out, m)?;
    out.flush()?;
    Ok(())
}

/// Parses a numeric CSV matrix.
///
/// Blank lines and lines starting with `#` are skipped. A single leading
/// header line of non-numeric fields is tolerated. Errors carry the 1-based
/// line number.
pub fn read_matrix_csv<R: Read>(input: R) -> Result<Matrix> {
    let reader = BufReader::new(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_content = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(first) = rows.first() {
                    if first.len() != values.len() {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("expected {} fields, found {}", first.len(), values.len()),
                        });
                    }
                }
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("non-finite value {bad}"),
                    });
                }
                rows.push(values);
            }
            Err(e) => {
                let all_text = fields.iter().all(|f| f.parse::<f64>().is_err());
                if !seen_content && all_text {
                    // header row
                } else {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("invalid number: {e}"),
                    });
                }
            }
        }
        seen_content = true;
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix_csv(fs::File::open(path)?)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let m = Matrix::from_row_slice(2, 3, &[0.1, -1.0 / 3.0, 1e-300, 2.0, 12345.678901234567, -0.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let back = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_errors_report_line() {
        let text = "# comment\n1,2\n3,x\n";
        match read_matrix_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "1,2\n3\n";
        match read_matrix_csv(ragged.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_header_tolerated() {
        let text = "a,b\n1,2\n";
        let m = read_matrix_csv(text.as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }
}
