//! Text serialization of complex matrices: one `row,col,re,im` line per
//! entry in row-major order.

use std::fmt::Write;

use super::{c, ComplexMatrix};
use crate::error::{Error, Result};

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            writeln!(out, "{i},{j},{},{}", z.re, z.im).expect("writing to a String");
        }
    }
    out
}

/// Parses the line format written by [`format_matrix`]. Blank lines and
/// lines starting with `#` are skipped; every entry must appear exactly once
/// and in row-major order.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
        let row: usize = fields[0].parse().map_err(|_| bad("row"))?;
        let col: usize = fields[1].parse().map_err(|_| bad("column"))?;
        let re: f64 = fields[2].parse().map_err(|_| bad("real part"))?;
        let im: f64 = fields[3].parse().map_err(|_| bad("imaginary part"))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad("non-finite value"));
        }
        entries.push((row, col, c(re, im)));
    }
    if entries.is_empty() {
        return Err(Error::Parse("no matrix entries".into()));
    }
    let rows = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let cols = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    if entries.len() != rows * cols {
        return Err(Error::Parse(format!(
            "{} entries do not fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (k, (row, col, z)) in entries.into_iter().enumerate() {
        if (row, col) != (k / cols, k % cols) {
            return Err(Error::Parse(format!(
                "entry ({row},{col}) out of row-major order"
            )));
        }
        m[(row, col)] = z;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_incomplete_and_unordered() {
        assert!(parse_matrix("0,0,1,0\n0,1,0,0\n1,0,0,0\n").is_err());
        assert!(parse_matrix("0,1,0,0\n0,0,1,0\n1,0,0,0\n1,1,1,0\n").is_err());
        assert!(parse_matrix("0,0,1\n").is_err());
        assert!(parse_matrix("").is_err());
    }

    #[test]
    fn skips_comments() {
        let m = parse_matrix("# E\n0,0,0.5,0\n\n0,1,0,-0.25\n1,0,0,0.25\n1,1,0.5,0\n").unwrap();
        assert_eq!(m[(0, 1)], c(0.0, -0.25));
    }
}
