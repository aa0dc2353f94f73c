//! Rendering of results as JSON, CSV or plain text.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use sandwich_core::format::{sig17, to_json_string};
use sandwich_core::MatrixJson;

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Rows of already formatted cells under named columns.
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }

    /// A single row of scalars.
    pub fn row(headers: &[&str], values: &[f64]) -> Self {
        Self::new(headers, vec![values.iter().map(|&v| sig17(v)).collect()])
    }

    /// Appends a column to a single-row table.
    pub fn push_text(&mut self, header: &str, value: String) {
        self.headers.push(header.into());
        if let Some(row) = self.rows.first_mut() {
            row.push(value);
        }
    }

    fn csv(&self) -> String {
        let mut s = self.headers.join(",") + "\n";
        for row in &self.rows {
            s += &row.join(",");
            s.push('\n');
        }
        s
    }

    /// `key value` lines for one row, aligned columns otherwise.
    fn text(&self) -> String {
        if self.rows.len() == 1 {
            let width = self.headers.iter().map(|h| h.len()).max().unwrap_or(0);
            return self
                .headers
                .iter()
                .zip(&self.rows[0])
                .map(|(h, v)| format!("{h:width$}  {v}\n"))
                .collect();
        }
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j].len())
                    .chain([self.headers[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> =
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:w$}")).collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut s = line(&self.headers);
        for row in &self.rows {
            s += &line(row);
        }
        s
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    to_json_string(value).map_err(|e| Failure::usage(format!("serialization: {e}")))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Where and how a command prints its result.
pub struct Output {
    format: Format,
    out: Option<PathBuf>,
}

impl Output {
    pub fn new(format: Format, out: Option<PathBuf>) -> Self {
        Self { format, out }
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::usage(format!("stdout: {e}"))),
        }
    }

    /// Scalar results: bare values in text, one object (or an array) in JSON.
    pub fn scalars<T: Serialize + ScalarValue>(&self, values: &[T]) -> Result<(), Failure> {
        let text = match self.format {
            Format::Json if values.len() == 1 => json(&values[0])?,
            Format::Json => json(values)?,
            Format::Csv => {
                let rows = values.iter().map(|v| v.cells()).collect();
                Table::new(&["kind", "t", "value"], rows).csv()
            }
            Format::Text if values.len() == 1 => sig17(values[0].value()) + "\n",
            Format::Text => values
                .iter()
                .map(|v| format!("{}  {}\n", v.t().map(sig17).unwrap_or_default(), sig17(v.value())))
                .collect(),
        };
        self.emit(&text)
    }

    pub fn matrix(&self, m: &MatrixJson) -> Result<(), Failure> {
        if self.format == Format::Csv {
            return Err(Failure::usage("matrices are written as JSON only"));
        }
        self.emit(&json(m)?)
    }

    /// A structured report: full JSON, or the given table as CSV or text.
    pub fn record<T: Serialize>(&self, value: &T, table: &Table) -> Result<(), Failure> {
        let text = match self.format {
            Format::Json => json(value)?,
            Format::Csv => table.csv(),
            Format::Text => table.text(),
        };
        self.emit(&text)
    }
}

/// Accessors used to render scalar rows as CSV or text.
pub trait ScalarValue {
    fn kind(&self) -> String;
    fn t(&self) -> Option<f64>;
    fn value(&self) -> f64;

    fn cells(&self) -> Vec<String> {
        vec![self.kind(), self.t().map(sig17).unwrap_or_default(), sig17(self.value())]
    }
}

impl ScalarValue for crate::ScalarRow {
    fn kind(&self) -> String {
        serde_json::to_value(self.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    fn t(&self) -> Option<f64> {
        self.t
    }

    fn value(&self) -> f64 {
        self.value
    }
}
