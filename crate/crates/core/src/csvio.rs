//! Numeric CSV helpers.
//!
//! Floats are written with 17 significant digits so every value round-trips exactly.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // keep -0.0 and 0.0 distinguishable but short
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{x:.16e}")
}

/// Writes a CSV line from already formatted fields.
pub fn write_row<W: Write, S: AsRef<str>>(w: &mut W, fields: &[S]) -> std::io::Result<()> {
    let mut first = true;
    for f in fields {
        if !first {
            w.write_all(b",")?;
        }
        first = false;
        w.write_all(f.as_ref().as_bytes())?;
    }
    w.write_all(b"\n")
}

/// Writes a matrix, one matrix row per line, no header.
pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|&x| fmt_f64(x)).collect();
        write_row(w, &row)?;
    }
    Ok(())
}

/// Reads numeric rows. With `header = true` the first line is returned separately.
/// Optional header fields and the numeric rows.
pub type Rows = (Option<Vec<String>>, Vec<Vec<f64>>);

pub fn read_rows<R: Read>(r: R, header: bool) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let head = if header {
        let h = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: '{s}' is not a number", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((head, rows))
}

/// Reads a header-less numeric CSV as a dense matrix.
pub fn read_matrix<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let (_, rows) = read_rows(r, false)?;
    rows_to_matrix(&rows)
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse(format!("row {} has a different length", i + 1)));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
