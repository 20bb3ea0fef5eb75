//! CSV matrix loading and atomic output writing.

use anyhow::{Context, Result};
use hdmean::{DataMatrix, Error};
use std::path::Path;

/// Load a CSV matrix: rows are observations, columns are dimensions. A first
/// row with any non-numeric field is treated as a header. Errors name the
/// offending 1-based line.
pub fn read_matrix(path: &Path, transpose: bool) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue; // blank line
        }
        let parsed: std::result::Result<Vec<f64>, usize> = fields
            .iter()
            .enumerate()
            .map(|(col, f)| f.parse::<f64>().map_err(|_| col))
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::Parse {
                            line,
                            message: format!(
                                "row has {} columns, expected {w}",
                                values.len()
                            ),
                        })
                        .with_context(|| path.display().to_string());
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err(col) => {
                // a non-numeric first row is a header; anywhere else it is an error
                if idx == 0 {
                    continue;
                }
                return Err(Error::Parse {
                    line,
                    message: format!("column {} is not numeric: '{}'", col + 1, fields[col]),
                })
                .with_context(|| path.display().to_string());
            }
        }
    }
    if rows.is_empty() {
        anyhow::bail!("{}: no data rows", path.display());
    }
    let rows = if transpose {
        let (r, c) = (rows.len(), rows[0].len());
        (0..c)
            .map(|j| (0..r).map(|i| rows[i][j]).collect())
            .collect()
    } else {
        rows
    };
    DataMatrix::from_rows(&rows).map_err(Into::into)
}

/// Write `content` to `path` atomically: a temporary file in the same
/// directory is persisted over the target, so partial outputs never land.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .context("cannot create temporary file")?;
    use std::io::Write;
    tmp.write_all(content.as_bytes())
        .context("cannot write temporary file")?;
    tmp.persist(path)
        .with_context(|| format!("cannot move output into place at {}", path.display()))?;
    Ok(())
}

/// Write to a path atomically, or to stdout when no path is given.
pub fn write_out(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
