//! CSV artifacts and the `report` table.

use std::path::Path;

use crate::error::CliError;

/// Columns that mark a sweep CSV; `report` sorts by them.
const SWEEP_COLUMNS: [&str; 2] = ["cost", "p"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Fixed nine-decimal rendering; rounding never yields a negative zero.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.9}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| fail(&e))?;
    w.write_record(&table.header).map_err(|e| fail(&e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

pub fn read_csv(path: &Path) -> Result<Table, CliError> {
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(bad("missing header row".into()));
    }
    let mut table = Table { header, rows: Vec::new() };
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        table.rows.push(record.iter().map(String::from).collect());
    }
    Ok(table)
}

enum Cell {
    Text(String),
    Number(String),
}

fn cell(raw: &str) -> Cell {
    if raw.parse::<i64>().is_ok() {
        return Cell::Number(raw.to_string());
    }
    match raw.parse::<f64>() {
        Ok(x) => Cell::Number(num(x)),
        Err(_) => Cell::Text(raw.to_string()),
    }
}

/// Renders a CSV produced by `run` as an aligned table. Sweep results are
/// sorted by the swept variable.
pub fn render(path: &Path, mut table: Table) -> Result<String, CliError> {
    if table.rows.is_empty() {
        return Ok(format!("{}: no rows\n", path.display()));
    }
    if SWEEP_COLUMNS.contains(&table.header[0].as_str()) {
        let mut keyed = Vec::with_capacity(table.rows.len());
        for (n, row) in table.rows.drain(..).enumerate() {
            let key: f64 = row[0].parse().map_err(|_| CliError::Input {
                path: path.to_path_buf(),
                message: format!("row {}: {} value {:?} is not a number", n + 1, table.header[0], row[0]),
            })?;
            keyed.push((key, row));
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        table.rows = keyed.into_iter().map(|(_, row)| row).collect();
    }
    let cells: Vec<Vec<Cell>> = table.rows.iter().map(|row| row.iter().map(|c| cell(c)).collect()).collect();
    let columns = table.header.len();
    let mut width: Vec<usize> = table.header.iter().map(|h| h.chars().count()).collect();
    let mut numeric = vec![true; columns];
    for row in &cells {
        for (j, c) in row.iter().enumerate() {
            let (text, is_num) = match c {
                Cell::Text(s) => (s, s.is_empty()),
                Cell::Number(s) => (s, true),
            };
            width[j] = width[j].max(text.chars().count());
            numeric[j] &= is_num;
        }
    }
    let line = |texts: Vec<&str>| -> String {
        let parts: Vec<String> = texts
            .iter()
            .enumerate()
            .map(|(j, t)| if numeric[j] { format!("{t:>w$}", w = width[j]) } else { format!("{t:<w$}", w = width[j]) })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(table.header.iter().map(String::as_str).collect());
    out += &line(width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in &cells {
        out += &line(row.iter().map(|c| match c {
            Cell::Text(s) | Cell::Number(s) => s.as_str(),
        }).collect());
    }
    Ok(out)
}

/// Row labels for an agent's types, low to high.
pub fn type_label(k: usize, n: usize) -> String {
    match (n, k) {
        (1, _) => "only".into(),
        (2, 0) | (3, 0) => "low".into(),
        (3, 1) => "mid".into(),
        (2, 1) | (3, 2) => "high".into(),
        _ => format!("type{k}"),
    }
}
