//! Reading and writing numeric matrices as CSV.

use std::io::{Read, Write};
use std::path::Path;

use sphericity::DataMatrix;

use crate::error::{CliError, CliResult};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

// The reader can report a record as starting on the terminator of the
// previous line, so skip line breaks before counting.
fn line_of(raw: &[u8], mut pos: usize) -> usize {
    while pos < raw.len() && matches!(raw[pos], b'\r' | b'\n') {
        pos += 1;
    }
    raw[..pos].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Parses an `n × p` matrix, rows are observations.
///
/// A first row that does not parse as numbers is treated as a header.
/// Diagnostics name the 1-based data row and column, plus the file line.
pub fn read_matrix<R: Read>(mut reader: R) -> CliResult<DataMatrix<f64>> {
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(raw.as_slice());

    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut row = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(idx + 1, |p| line_of(&raw, p.byte() as usize));
        if idx == 0 && record.iter().any(|f| parse_field(f).is_none()) {
            width = Some(record.len());
            continue;
        }
        row += 1;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::Input(format!(
                "row {row} (line {line}) has {} fields, expected {expected}",
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v = parse_field(field).ok_or_else(|| {
                CliError::Input(format!(
                    "row {row}, column {} (line {line}): cannot parse '{field}' as a number",
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "row {row}, column {} (line {line}): non-finite value '{field}'",
                    col + 1
                )));
            }
            values.push(v);
        }
    }
    let p = width.unwrap_or(0);
    if row < 3 || p < 2 {
        return Err(CliError::Input(format!(
            "need at least 3 rows and 2 columns of data, found {row} x {p}"
        )));
    }
    Ok(DataMatrix::new(row, p, values)?)
}

pub fn read_matrix_file(path: &Path) -> CliResult<DataMatrix<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    read_matrix(std::io::BufReader::new(file))
}

/// Writes a header `x1,…,xp` followed by one line per observation.
pub fn write_matrix<W: Write>(mut w: W, data: &DataMatrix<f64>) -> std::io::Result<()> {
    let header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_exact(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}
