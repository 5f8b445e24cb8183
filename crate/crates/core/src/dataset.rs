//! Tabular input: CSV loading and per-attribute value series.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("missing value in numeric column `{column}` at row {row}")]
    MissingValue { column: String, row: usize },
    #[error("row {0} does not exist")]
    UnknownRow(usize),
    #[error("value `{value}` for column `{column}` is not a finite number")]
    BadNumber { column: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Text,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
        }
    }
}

/// A loaded table. Row ids are positions in `rows`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    columns: Vec<Column>,
    rows: Vec<Vec<String>>,
    /// Parsed cells of numeric columns, `None` for text columns.
    numbers: Vec<Option<Vec<f64>>>,
    pub primary_label: Option<String>,
}

impl Dataset {
    pub fn from_records(
        name: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for h in &header {
            if !seen.insert(h.as_str()) {
                return Err(DatasetError::DuplicateColumn(h.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(DatasetError::RaggedRow {
                    row: i,
                    found: r.len(),
                    expected: header.len(),
                });
            }
        }

        let mut columns = Vec::with_capacity(header.len());
        let mut numbers = Vec::with_capacity(header.len());
        for (c, name) in header.into_iter().enumerate() {
            let parsed = parse_numeric_column(&rows, c);
            let kind = match parsed {
                Some(_) => ColumnKind::Numeric,
                None => ColumnKind::Text,
            };
            columns.push(Column { name, kind });
            numbers.push(parsed);
        }
        // A column with non-empty numeric cells and some empty ones is still
        // numeric, but missing values are refused.
        for (c, col) in columns.iter().enumerate() {
            if col.kind == ColumnKind::Numeric {
                if let Some(row) = rows.iter().position(|r| r[c].trim().is_empty()) {
                    return Err(DatasetError::MissingValue {
                        column: col.name.clone(),
                        row,
                    });
                }
            }
        }

        let primary_label = columns
            .iter()
            .find(|c| c.kind == ColumnKind::Text)
            .map(|c| c.name.clone());
        Ok(Self {
            name: name.into(),
            columns,
            rows,
            numbers,
            primary_label,
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, id: usize) -> Option<&[String]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.column_index(column)?;
        self.rows.get(row).map(|r| r[c].as_str())
    }

    pub fn numeric_column(&self, name: &str) -> Result<&[f64], DatasetError> {
        let c = self
            .column_index(name)
            .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))?;
        self.numbers[c]
            .as_deref()
            .ok_or_else(|| DatasetError::NotNumeric(name.to_string()))
    }

    pub fn value(&self, row: usize, column: &str) -> Result<f64, DatasetError> {
        let col = self.numeric_column(column)?;
        col.get(row).copied().ok_or(DatasetError::UnknownRow(row))
    }

    /// Appends a row given as `(column, cell)` pairs; every column must be present.
    pub fn push_row(&mut self, cells: &[(String, String)]) -> Result<usize, DatasetError> {
        let mut row = vec![None; self.columns.len()];
        for (name, value) in cells {
            let c = self
                .column_index(name)
                .ok_or_else(|| DatasetError::UnknownColumn(name.clone()))?;
            row[c] = Some(value.clone());
        }
        let id = self.rows.len();
        let mut out = Vec::with_capacity(row.len());
        for (c, cell) in row.into_iter().enumerate() {
            let cell = cell.ok_or(DatasetError::RaggedRow {
                row: id,
                found: cells.len(),
                expected: self.columns.len(),
            })?;
            if self.columns[c].kind == ColumnKind::Numeric {
                match cell.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => {}
                    _ => {
                        return Err(DatasetError::BadNumber {
                            column: self.columns[c].name.clone(),
                            value: cell,
                        })
                    }
                }
            }
            out.push(cell);
        }
        for (c, nums) in self.numbers.iter_mut().enumerate() {
            if let Some(nums) = nums {
                nums.push(out[c].trim().parse().expect("checked above"));
            }
        }
        self.rows.push(out);
        Ok(id)
    }

    /// Removes a row; later rows shift down by one position.
    pub fn remove_row(&mut self, id: usize) -> Result<Vec<String>, DatasetError> {
        if id >= self.rows.len() {
            return Err(DatasetError::UnknownRow(id));
        }
        for nums in self.numbers.iter_mut().flatten() {
            nums.remove(id);
        }
        Ok(self.rows.remove(id))
    }

    pub fn write_csv<W: Write>(&self, out: W, options: CsvOptions) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(options.delimiter)
            .from_writer(out);
        if options.has_header {
            w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|source| DatasetError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

fn parse_numeric_column(rows: &[Vec<String>], c: usize) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len());
    let mut any = false;
    for r in rows {
        let cell = r[c].trim();
        if cell.is_empty() {
            out.push(f64::NAN);
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                any = true;
                out.push(v);
            }
            _ => return None,
        }
    }
    // An empty table has no evidence either way; treat its columns as numeric
    // only if the header is all there is.
    if any || rows.is_empty() {
        Some(out)
    } else {
        None
    }
}

pub fn read_csv<R: Read>(
    name: &str,
    input: R,
    options: CsvOptions,
) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }
    let header: Vec<String> = if options.has_header {
        rdr.headers()?.iter().map(|s| s.trim().to_string()).collect()
    } else {
        let width = rows.first().map_or(0, Vec::len);
        (0..width).map(|i| format!("c{i}")).collect()
    };
    Dataset::from_records(name, header, rows)
}

pub fn load_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(&name, file, options)
}

/// Sorted distinct values of one numeric column, with multiplicities and the
/// rows holding each value.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSeries {
    pub attribute: String,
    values: Vec<f64>,
    counts: Vec<usize>,
    occupants: Vec<Vec<usize>>,
}

impl AttributeSeries {
    /// Builds a series from raw observations; `rows[i]` is the row id of `raw[i]`.
    pub fn from_observations(attribute: impl Into<String>, raw: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..raw.len()).collect();
        idx.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
        let mut s = Self {
            attribute: attribute.into(),
            values: Vec::new(),
            counts: Vec::new(),
            occupants: Vec::new(),
        };
        for i in idx {
            let v = raw[i];
            if s.values.last() == Some(&v) {
                *s.counts.last_mut().unwrap() += 1;
                s.occupants.last_mut().unwrap().push(i);
            } else {
                s.values.push(v);
                s.counts.push(1);
                s.occupants.push(vec![i]);
            }
        }
        s
    }

    /// Series of distinct values with explicit multiplicities and no row bookkeeping.
    pub fn from_counts(attribute: impl Into<String>, pairs: &[(f64, usize)]) -> Self {
        let mut pairs: Vec<(f64, usize)> = pairs.iter().copied().filter(|p| p.1 > 0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s = Self {
            attribute: attribute.into(),
            values: Vec::new(),
            counts: Vec::new(),
            occupants: Vec::new(),
        };
        for (v, n) in pairs {
            if s.values.last() == Some(&v) {
                *s.counts.last_mut().unwrap() += n;
            } else {
                s.values.push(v);
                s.counts.push(n);
                s.occupants.push(Vec::new());
            }
        }
        s
    }

    pub fn from_values(attribute: impl Into<String>, values: &[f64]) -> Self {
        Self::from_observations(attribute, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn position(&self, v: f64) -> Option<usize> {
        self.values.binary_search_by(|x| x.total_cmp(&v)).ok()
    }

    pub fn multiplicity(&self, v: f64) -> usize {
        self.position(v).map_or(0, |i| self.counts[i])
    }

    pub fn occupants(&self, v: f64) -> &[usize] {
        self.position(v).map_or(&[], |i| self.occupants[i].as_slice())
    }

    /// Adds one observation; returns true when `v` was not present before.
    pub fn add(&mut self, v: f64, row: Option<usize>) -> bool {
        match self.values.binary_search_by(|x| x.total_cmp(&v)) {
            Ok(i) => {
                self.counts[i] += 1;
                self.occupants[i].extend(row);
                false
            }
            Err(i) => {
                self.values.insert(i, v);
                self.counts.insert(i, 1);
                self.occupants.insert(i, row.into_iter().collect());
                true
            }
        }
    }

    /// Removes one observation; returns `Some(true)` when the value disappeared
    /// entirely, `None` when it was absent.
    pub fn remove(&mut self, v: f64, row: Option<usize>) -> Option<bool> {
        let i = self.position(v)?;
        self.counts[i] -= 1;
        match row {
            Some(r) => self.occupants[i].retain(|&o| o != r),
            None => {
                self.occupants[i].pop();
            }
        }
        if self.counts[i] == 0 {
            self.values.remove(i);
            self.counts.remove(i);
            self.occupants.remove(i);
            Some(true)
        } else {
            Some(false)
        }
    }
}

pub fn attribute_series(ds: &Dataset, attr: &str) -> Result<AttributeSeries, DatasetError> {
    let col = ds.numeric_column(attr)?;
    Ok(AttributeSeries::from_observations(attr, col))
}
