//! CSV loading. Rows and columns in error messages are 1-based; rows count
//! data records only, so the header is never row 1.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use cvxfit::numerics::Dataset;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("file contains no data rows")]
    Empty,
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("cell {value:?} at row {row}, column {col} is not a number")]
    NotNumeric { row: usize, col: usize, value: String },
    #[error("target column {0} not found")]
    MissingTarget(String),
    #[error("need at least one feature column besides the target")]
    NoFeatures,
    #[error("malformed CSV: {0}")]
    Csv(String),
}

/// Which column holds the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Last,
    /// Header name.
    Name(String),
    /// 1-based position.
    Index(usize),
    /// Feature-only file.
    None,
}

impl Target {
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_owned()),
        }
    }
}

/// Parsed table before it is split into features and response.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

pub fn read_table<R: Read>(reader: R, has_header: bool) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if has_header {
        let h = rdr.headers().map_err(|e| IngestError::Csv(e.to_string()))?;
        Some(h.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let mut cols = header.as_ref().map(Vec::len).filter(|&c| c > 0);
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows += 1;
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IngestError::Ragged { row: rows, expected, got: record.len() });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IngestError::NotNumeric {
                row: rows,
                col: c + 1,
                value: cell.to_owned(),
            })?;
            values.push(v);
        }
    }
    if rows == 0 {
        return Err(IngestError::Empty);
    }
    Ok(Table { header, rows, cols: cols.unwrap_or(0), values })
}

impl Table {
    fn target_index(&self, target: &Target) -> Result<Option<usize>, IngestError> {
        Ok(match target {
            Target::None => None,
            Target::Last => Some(self.cols - 1),
            Target::Index(i) if (1..=self.cols).contains(i) => Some(i - 1),
            Target::Index(i) => return Err(IngestError::MissingTarget(i.to_string())),
            Target::Name(name) => Some(
                self.header
                    .as_ref()
                    .and_then(|h| h.iter().position(|c| c == name))
                    .ok_or_else(|| IngestError::MissingTarget(name.clone()))?,
            ),
        })
    }

    /// Feature matrix and, unless `target` is `None`, the response column.
    pub fn split(&self, target: &Target) -> Result<(Array2<f64>, Option<Array1<f64>>), IngestError> {
        let t = self.target_index(target)?;
        let d = self.cols - usize::from(t.is_some());
        if d == 0 {
            return Err(IngestError::NoFeatures);
        }
        let mut x = Vec::with_capacity(self.rows * d);
        let mut y = Vec::with_capacity(self.rows);
        for row in self.values.chunks(self.cols) {
            for (c, &v) in row.iter().enumerate() {
                if Some(c) == t {
                    y.push(v);
                } else {
                    x.push(v);
                }
            }
        }
        let x = Array2::from_shape_vec((self.rows, d), x).expect("rectangular table");
        Ok((x, t.map(|_| Array1::from_vec(y))))
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

/// Loads a labelled dataset; row order is preserved.
pub fn ingest_csv(path: &Path, target: &Target, has_header: bool) -> Result<Dataset, IngestError> {
    let table = read_table(open(path)?, has_header)?;
    let (x, y) = table.split(target)?;
    let y = y.ok_or_else(|| IngestError::MissingTarget("none".into()))?;
    Dataset::new(x, y).map_err(|e| IngestError::Csv(e.to_string()))
}

/// Loads a feature-only file of query points.
pub fn ingest_points(path: &Path, has_header: bool) -> Result<Array2<f64>, IngestError> {
    let table = read_table(open(path)?, has_header)?;
    Ok(table.split(&Target::None)?.0)
}
