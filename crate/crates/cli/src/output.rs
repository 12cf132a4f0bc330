//! Rendering: aligned tables for people, CSV and JSON envelopes for pipelines.
//!
//! CSV and JSON carry full precision (shortest round-trip decimal); tables
//! round through [`fmt_num`], so rounding a machine value reproduces the
//! table cell.

use std::io::Write;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope<T> {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub generated_at: String,
    pub payload: T,
    pub warnings: Vec<String>,
}

/// Four decimals, switching to scientific notation outside [1e-3, 1e7).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 || (1e-3..1e7).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.4e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }

    fn human(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => "-".into(),
        }
    }

    fn machine(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Cell::Num(_) | Cell::Int(_))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Two-column table of labelled values.
    pub fn key_values(pairs: Vec<(&str, Cell)>) -> Self {
        let mut t = Table::new(&["quantity", "value"]);
        for (k, v) in pairs {
            t.push(vec![k.into(), v]);
        }
        t
    }

    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::human).collect()).collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                cells
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain(std::iter::once(self.headers[c].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, parts: Vec<String>| {
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(
            &mut out,
            self.headers
                .iter()
                .zip(&widths)
                .map(|(h, w)| format!("{h:<w$}"))
                .collect(),
        );
        line(&mut out, widths.iter().map(|w| "-".repeat(*w)).collect());
        for (row, text) in self.rows.iter().zip(&cells) {
            line(
                &mut out,
                row.iter()
                    .zip(text)
                    .zip(&widths)
                    .map(|((cell, s), w)| {
                        if cell.is_numeric() {
                            format!("{s:>w$}")
                        } else {
                            format!("{s:<w$}")
                        }
                    })
                    .collect(),
            );
        }
        out
    }

    pub fn write_csv(&self, out: impl Write) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::machine))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Everything a command produces, ready for any output format.
pub struct Output<T> {
    pub payload: T,
    /// Tables shown in table mode; the first one is the CSV body.
    pub tables: Vec<(Option<String>, Table)>,
    /// Lines printed under the tables in table mode.
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl<T> Output<T> {
    pub fn new(payload: T, table: Table) -> Self {
        Self {
            payload,
            tables: vec![(None, table)],
            notes: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

pub fn emit<T: Serialize, P: Serialize>(format: Format, command: &str, params: &P, output: Output<T>) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e: std::io::Error| crate::error::CliError::usage(format!("writing output: {e}"));
    match format {
        Format::Table => {
            for (i, (title, table)) in output.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out).map_err(io)?;
                }
                if let Some(t) = title {
                    writeln!(out, "{t}").map_err(io)?;
                }
                write!(out, "{}", table.render()).map_err(io)?;
            }
            for note in &output.notes {
                writeln!(out, "{note}").map_err(io)?;
            }
        }
        Format::Csv => {
            if let Some((_, table)) = output.tables.first() {
                table.write_csv(&mut out)?;
            }
        }
        Format::Json => {
            let envelope = ReportEnvelope {
                schema_version: SCHEMA_VERSION,
                tool: env!("CARGO_PKG_NAME").into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                parameters: serde_json::to_value(params)?,
                generated_at: chrono::Utc::now().to_rfc3339(),
                payload: &output.payload,
                warnings: output.warnings.clone(),
            };
            serde_json::to_writer_pretty(&mut out, &envelope)?;
            writeln!(out).map_err(io)?;
        }
    }
    if format != Format::Json {
        for w in &output.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}
