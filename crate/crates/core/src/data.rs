//! Typed columnar tables loaded from CSV.

use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Logical,
    Character,
}

impl ColumnKind {
    /// Categorical, logical and character columns all enter a model as
    /// treatment-coded factors.
    pub fn is_categorical(self) -> bool {
        !matches!(self, ColumnKind::Numeric)
    }
}

/// Column storage; `None` marks a missing entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Logical(Vec<Option<bool>>),
    Character(Vec<Option<String>>),
}

/// A single cell as seen by model code: a number or a level label.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Level(String),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
            Column::Logical(_) => ColumnKind::Logical,
            Column::Character(_) => ColumnKind::Character,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) | Column::Character(v) => v.len(),
            Column::Logical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical(v) | Column::Character(v) => v[row].is_none(),
            Column::Logical(v) => v[row].is_none(),
        }
    }

    pub fn value(&self, row: usize) -> Option<Value> {
        match self {
            Column::Numeric(v) => v[row].map(Value::Number),
            Column::Categorical(v) | Column::Character(v) => v[row].clone().map(Value::Level),
            Column::Logical(v) => v[row].map(|b| Value::Level(logical_label(b).to_string())),
        }
    }

    /// Non-missing numeric values; empty for non-numeric columns.
    pub fn numbers(&self) -> Vec<f64> {
        match self {
            Column::Numeric(v) => v.iter().flatten().copied().collect(),
            _ => Vec::new(),
        }
    }

    /// Sorted distinct level labels. Logical columns order FALSE < TRUE.
    pub fn levels(&self) -> Vec<String> {
        let mut out: Vec<String> = match self {
            Column::Numeric(_) => return Vec::new(),
            Column::Categorical(v) | Column::Character(v) => v.iter().flatten().cloned().collect(),
            Column::Logical(v) => v.iter().flatten().map(|b| logical_label(*b).to_string()).collect(),
        };
        out.sort();
        out.dedup();
        out
    }

    fn select(&self, rows: &[usize]) -> Column {
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&r| v[r].clone()).collect()
        }
        match self {
            Column::Numeric(v) => Column::Numeric(pick(v, rows)),
            Column::Categorical(v) => Column::Categorical(pick(v, rows)),
            Column::Logical(v) => Column::Logical(pick(v, rows)),
            Column::Character(v) => Column::Character(pick(v, rows)),
        }
    }
}

pub fn logical_label(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

/// Columnar table with optional row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
    row_ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(columns: Vec<(String, Column)>, row_ids: Option<Vec<String>>) -> Result<Self> {
        let n_rows = columns
            .first()
            .map(|(_, c)| c.len())
            .or(row_ids.as_ref().map(Vec::len))
            .unwrap_or(0);
        let mut names = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        for (name, col) in columns {
            if col.len() != n_rows {
                return Err(Error::Invalid(format!(
                    "column `{name}` has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if names.contains(&name) {
                return Err(Error::Csv(format!("duplicate column name `{name}`")));
            }
            names.push(name);
            cols.push(col);
        }
        if let Some(ids) = &row_ids {
            if ids.len() != n_rows {
                return Err(Error::Invalid("row id count does not match row count".into()));
            }
        }
        Ok(Dataset { names, columns: cols, n_rows, row_ids })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row_ids(&self) -> Option<&[String]> {
        self.row_ids.as_deref()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn require(&self, name: &str) -> Result<&Column> {
        self.column(name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn schema(&self) -> HashMap<String, ColumnKind> {
        self.names.iter().cloned().zip(self.columns.iter().map(Column::kind)).collect()
    }

    /// Adds or replaces a column.
    pub fn with_column(mut self, name: &str, column: Column) -> Result<Self> {
        if column.len() != self.n_rows {
            return Err(Error::Invalid(format!("column `{name}` has wrong length")));
        }
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.columns[i] = column,
            None => {
                self.names.push(name.to_string());
                self.columns.push(column);
            }
        }
        Ok(self)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
            row_ids: self.row_ids.as_ref().map(|ids| rows.iter().map(|&r| ids[r].clone()).collect()),
        }
    }

    /// Index of the row whose identifier equals `id`.
    pub fn find_row(&self, id: &str) -> Option<usize> {
        self.row_ids.as_ref()?.iter().position(|r| r == id)
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub id_column: Option<String>,
    /// Columns forced to [`ColumnKind::Categorical`] regardless of content.
    pub categorical: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', has_header: true, id_column: None, categorical: Vec::new() }
    }
}

pub fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_logical(s: &str) -> Option<bool> {
    match s {
        "TRUE" | "true" => Some(true),
        "FALSE" | "false" => Some(false),
        _ => None,
    }
}

/// Infers a column's kind from its raw text; missing tokens are ignored.
pub fn infer_column_kind<S: AsRef<str>>(raw: &[S]) -> ColumnKind {
    let present = || raw.iter().map(AsRef::as_ref).filter(|s| !is_missing_token(s));
    if present().all(|s| parse_number(s).is_some()) {
        ColumnKind::Numeric
    } else if present().all(|s| parse_logical(s).is_some()) {
        ColumnKind::Logical
    } else {
        ColumnKind::Character
    }
}

fn build_column(raw: Vec<String>, kind: ColumnKind) -> Column {
    let cells = raw.into_iter().map(|s| (!is_missing_token(&s)).then_some(s));
    match kind {
        ColumnKind::Numeric => Column::Numeric(cells.map(|c| c.and_then(|s| parse_number(&s))).collect()),
        ColumnKind::Logical => Column::Logical(cells.map(|c| c.and_then(|s| parse_logical(&s))).collect()),
        ColumnKind::Categorical => Column::Categorical(cells.collect()),
        ColumnKind::Character => Column::Character(cells.collect()),
    }
}

pub fn read_csv<R: Read>(source: R, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(|e| Error::Csv(e.to_string()))?,
        None => return Err(Error::Csv("empty file".into())),
    };
    let width = first.len();
    let (names, mut raw_rows): (Vec<String>, Vec<Vec<String>>) = if options.has_header {
        (first.iter().map(str::to_string).collect(), Vec::new())
    } else {
        ((1..=width).map(|i| format!("V{i}")).collect(), vec![first.iter().map(str::to_string).collect()])
    };
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(Error::Csv(format!("duplicate header name `{name}`")));
        }
    }
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != width {
            let row = line + 1 + usize::from(!options.has_header);
            return Err(Error::Csv(format!(
                "ragged row {row}: {} fields, expected {width}",
                rec.len()
            )));
        }
        raw_rows.push(rec.iter().map(str::to_string).collect());
    }

    for forced in &options.categorical {
        if !names.contains(forced) {
            return Err(Error::UnknownColumn(forced.clone()));
        }
    }

    let mut raw_cols: Vec<Vec<String>> = vec![Vec::with_capacity(raw_rows.len()); width];
    for row in raw_rows {
        for (col, cell) in raw_cols.iter_mut().zip(row) {
            col.push(cell);
        }
    }

    let mut row_ids = None;
    let mut columns = Vec::with_capacity(width);
    for (name, raw) in names.into_iter().zip(raw_cols) {
        if options.id_column.as_deref() == Some(name.as_str()) {
            row_ids = Some(raw);
            continue;
        }
        let kind = if options.categorical.contains(&name) {
            ColumnKind::Categorical
        } else {
            infer_column_kind(&raw)
        };
        columns.push((name, build_column(raw, kind)));
    }
    if let Some(id) = &options.id_column {
        if row_ids.is_none() {
            return Err(Error::UnknownColumn(id.clone()));
        }
    }
    Dataset::new(columns, row_ids)
}

/// Keeps rows with no missing value in any of `needed`. Returns the
/// reduced dataset and the number of dropped rows.
pub fn complete_cases(ds: &Dataset, needed: &[String]) -> Result<(Dataset, usize)> {
    let cols = needed.iter().map(|n| ds.require(n)).collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> =
        (0..ds.n_rows()).filter(|&r| cols.iter().all(|c| !c.is_missing(r))).collect();
    if keep.is_empty() {
        return Err(Error::NoCompleteCases(needed.to_vec()));
    }
    let dropped = ds.n_rows() - keep.len();
    Ok((ds.select_rows(&keep), dropped))
}
