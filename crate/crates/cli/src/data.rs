//! CSV ingestion.

use std::path::{Path, PathBuf};

use glob::Pattern;
use nalgebra::{DMatrix, DVector};
use pds_core::selection::EstimationData;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path} is empty")]
    Empty { path: PathBuf },

    #[error("{path} has no column '{column}'")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: pattern '{pattern}' matches no column")]
    NoMatch { path: PathBuf, pattern: String },

    #[error("invalid column pattern '{pattern}': {message}")]
    BadPattern { pattern: String, message: String },

    #[error("{path}: non-numeric value '{value}' at row {row}, column '{column}'")]
    NonNumeric {
        path: PathBuf,
        /// 1-based data row (the header is not counted).
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: no row is complete in the requested columns ({dropped} dropped)")]
    NoCompleteRows { path: PathBuf, dropped: usize },
}

/// Which columns to read. Entries of `z` may be glob patterns.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub y: String,
    pub x: String,
    pub z: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// `n x d`, columns in `z_names` order.
    pub z: DMatrix<f64>,
    pub z_names: Vec<String>,
    /// Rows dropped for a missing value in a requested column.
    pub dropped: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn estimation_data(&self) -> EstimationData {
        EstimationData {
            x: self.x.clone(),
            z: self.z.clone(),
            y: DVector::from_column_slice(&self.y),
            h_true: None,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "N/A" | "na" | "NaN" | "nan" | "." | "null" | "NULL")
}

fn is_pattern(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

/// Expands `z` against the header: plain names must exist, patterns expand
/// in header order and never pick up `y` or `x`. Duplicates are dropped.
pub fn resolve_z(header: &[String], spec: &ColumnSpec, path: &Path) -> Result<Vec<String>, DataError> {
    let mut out: Vec<String> = Vec::new();
    for item in &spec.z {
        if is_pattern(item) {
            let pattern = Pattern::new(item).map_err(|e| DataError::BadPattern {
                pattern: item.clone(),
                message: e.msg.to_string(),
            })?;
            let before = out.len();
            for name in header {
                if pattern.matches(name) && *name != spec.y && *name != spec.x && !out.contains(name) {
                    out.push(name.clone());
                }
            }
            if out.len() == before && !header.iter().any(|h| pattern.matches(h)) {
                return Err(DataError::NoMatch {
                    path: path.to_path_buf(),
                    pattern: item.clone(),
                });
            }
        } else if !header.contains(item) {
            return Err(DataError::MissingColumn {
                path: path.to_path_buf(),
                column: item.clone(),
            });
        } else if !out.contains(item) {
            out.push(item.clone());
        }
    }
    Ok(out)
}

/// Reads the requested columns. Rows with a missing value (empty, `NA`,
/// `NaN`, `.`, `null`) in any of them are dropped and counted.
pub fn load_csv(path: &Path, spec: &ColumnSpec) -> Result<Dataset, DataError> {
    let read_err = |source| DataError::Read {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(read_err)?;
    let header: Vec<String> = reader.headers().map_err(read_err)?.iter().map(str::to_string).collect();
    if header.iter().all(String::is_empty) {
        return Err(DataError::Empty { path: path.to_path_buf() });
    }
    let position = |column: &str| {
        header.iter().position(|h| h == column).ok_or_else(|| DataError::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })
    };
    let iy = position(&spec.y)?;
    let ix = position(&spec.x)?;
    let z_names = resolve_z(&header, spec, path)?;
    let iz = z_names.iter().map(|c| position(c)).collect::<Result<Vec<_>, _>>()?;

    let wanted: Vec<(usize, &str)> = [(iy, spec.y.as_str()), (ix, spec.x.as_str())]
        .into_iter()
        .chain(iz.iter().copied().zip(z_names.iter().map(String::as_str)))
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    let mut seen = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(read_err)?;
        seen += 1;
        let mut values = Vec::with_capacity(wanted.len());
        let mut complete = true;
        for &(col, name) in &wanted {
            let cell = record.get(col).unwrap_or("");
            if is_missing(cell) {
                complete = false;
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(DataError::NonNumeric {
                        path: path.to_path_buf(),
                        row: r + 1,
                        column: name.to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        if complete {
            rows.push(values);
        } else {
            dropped += 1;
        }
    }
    if seen == 0 {
        return Err(DataError::Empty { path: path.to_path_buf() });
    }
    if rows.is_empty() {
        return Err(DataError::NoCompleteRows {
            path: path.to_path_buf(),
            dropped,
        });
    }
    let n = rows.len();
    Ok(Dataset {
        y: rows.iter().map(|r| r[0]).collect(),
        x: rows.iter().map(|r| r[1]).collect(),
        z: DMatrix::from_fn(n, z_names.len(), |i, j| rows[i][j + 2]),
        z_names,
        dropped,
    })
}
