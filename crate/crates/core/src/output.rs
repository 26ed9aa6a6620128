//! Result tables in CSV or JSON Lines.
//!
//! A CSV file starts with `# key=value` comment lines holding the resolved
//! parameters of the run, followed by the column row and the data rows. A
//! JSONL file starts with `{"header": {...}}` and has one object per data
//! row, keyed by the same column names. Floats are written with 17
//! significant digits so that they read back bit-exactly; in JSONL,
//! non-finite floats become `null`.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::bounds::{ConverseReport, RateReport};
use crate::coeffs::Classification;
use crate::harness::{ConcentrationRow, DemoRow, ResidualRow, SweepRow};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed result file: {0}")]
    Malformed(String),
    #[error("row has {got} cells, expected {expected}")]
    RowWidth { got: usize, expected: usize },
    #[error("unknown output format '{0}' (expected csv or jsonl)")]
    UnknownFormat(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        })
    }
}

impl FromStr for Format {
    type Err = OutputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(OutputError::UnknownFormat(other.to_string())),
        }
    }
}

/// One value in a result row.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf`
/// otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`format_float`]; an empty field reads as `NaN`.
pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format_float(*v),
            Cell::Float(_) | Cell::Empty => "null".to_string(),
            Cell::Text(s) => Value::String(s.clone()).to_string(),
        }
    }
}

enum Sink<W: Write> {
    Csv(csv::Writer<W>),
    Jsonl(W),
}

/// Streams a result table to `W`, header first.
pub struct TableWriter<W: Write> {
    columns: Vec<String>,
    sink: Sink<W>,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut inner: W, format: Format, header: &[(String, String)], columns: &[&str]) -> Result<Self, OutputError> {
        let columns: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        let sink = match format {
            Format::Csv => {
                for (k, v) in header {
                    writeln!(inner, "# {k}={v}")?;
                }
                let mut w = csv::Writer::from_writer(inner);
                w.write_record(&columns)?;
                Sink::Csv(w)
            }
            Format::Jsonl => {
                let map: Map<String, Value> = header.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
                let mut top = Map::new();
                top.insert("header".to_string(), Value::Object(map));
                writeln!(inner, "{}", Value::Object(top))?;
                Sink::Jsonl(inner)
            }
        };
        Ok(Self { columns, sink })
    }

    pub fn write_row(&mut self, cells: &[Cell]) -> Result<(), OutputError> {
        if cells.len() != self.columns.len() {
            return Err(OutputError::RowWidth {
                got: cells.len(),
                expected: self.columns.len(),
            });
        }
        match &mut self.sink {
            Sink::Csv(w) => {
                w.write_record(cells.iter().map(Cell::text))?;
                w.flush()?;
            }
            Sink::Jsonl(w) => {
                let body: Vec<String> = self
                    .columns
                    .iter()
                    .zip(cells)
                    .map(|(k, c)| format!("{}:{}", Value::String(k.clone()), c.json()))
                    .collect();
                writeln!(w, "{{{}}}", body.join(","))?;
                w.flush()?;
            }
        }
        Ok(())
    }

    /// Flushes and returns the underlying writer.
    pub fn finish(self) -> Result<W, OutputError> {
        match self.sink {
            Sink::Csv(w) => w.into_inner().map_err(|e| OutputError::Io(e.into_error())),
            Sink::Jsonl(mut w) => {
                w.flush()?;
                Ok(w)
            }
        }
    }
}

/// A result table read back from disk. Cells keep their textual form;
/// JSON `null` becomes the empty string.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTable {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float in `row` under `name`; `None` if the column is missing or the
    /// cell does not parse.
    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        parse_float(self.rows.get(row)?.get(self.column(name)?)?)
    }
}

/// Parses a result file in either format, detected from its first byte.
pub fn parse_table(text: &str) -> Result<ParsedTable, OutputError> {
    if text.trim_start().starts_with('{') {
        parse_jsonl(text)
    } else {
        parse_csv(text)
    }
}

pub fn read_table(path: impl AsRef<Path>) -> Result<ParsedTable, OutputError> {
    parse_table(&std::fs::read_to_string(path)?)
}

fn parse_csv(text: &str) -> Result<ParsedTable, OutputError> {
    let mut header = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        body_start += line.len();
        let rest = rest.trim();
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| OutputError::Malformed(format!("header line without '=': {rest}")))?;
        header.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(text[body_start..].as_bytes());
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(ParsedTable { header, columns, rows })
}

fn parse_jsonl(text: &str) -> Result<ParsedTable, OutputError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| OutputError::Malformed("empty file".into()))?;
    let first: Value = serde_json::from_str(first).map_err(|source| OutputError::Json { line: 1, source })?;
    let header = match first.get("header") {
        Some(Value::Object(map)) => map
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().map_or_else(|| v.to_string(), str::to_string)))
            .collect(),
        _ => return Err(OutputError::Malformed("first line must be a header object".into())),
    };
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let v: Value = serde_json::from_str(line).map_err(|source| OutputError::Json { line: i + 1, source })?;
        let Value::Object(map) = v else {
            return Err(OutputError::Malformed(format!("line {} is not an object", i + 1)));
        };
        let keys: Vec<String> = map.keys().cloned().collect();
        match &columns {
            None => columns = Some(keys),
            Some(c) if *c != keys => {
                return Err(OutputError::Malformed(format!("line {} has different keys", i + 1)));
            }
            Some(_) => {}
        }
        rows.push(map.values().map(json_cell_text).collect());
    }
    Ok(ParsedTable {
        header,
        columns: columns.unwrap_or_default(),
        rows,
    })
}

fn json_cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.to_string(),
            None => format_float(n.as_f64().unwrap_or(f64::NAN)),
        },
        other => other.to_string(),
    }
}

/// Columns of an error-sweep table.
pub const SWEEP_COLUMNS: [&str; 14] = [
    "spec",
    "sigma2",
    "snr",
    "L",
    "n",
    "messages",
    "rate_nats",
    "trials",
    "errors",
    "err_prob",
    "ci_lo",
    "ci_hi",
    "ach_rate_pre_limit",
    "seed",
];

/// Columns of a norm-concentration table.
pub const CONCENTRATION_COLUMNS: [&str; 10] =
    ["n", "m", "mean_y", "mean_z", "target_y", "target_z", "var_y", "var_z", "hit_frac", "eps"];

/// Columns of a residual-variance profile.
pub const RESIDUAL_COLUMNS: [&str; 6] = ["k", "x", "noise_var", "emp_mean", "emp_var", "trials"];

/// Columns of the rate-versus-SNR demo table.
pub const DEMO_COLUMNS: [&str; 6] = ["spec", "sigma2", "snr", "L", "rate_nats", "asymptotic_rate"];

/// Columns of the classification table.
pub const CLASSIFY_COLUMNS: [&str; 6] = ["spec", "horizon", "verdict", "liminf_ratio", "limsup_ratio", "decay_stat"];

/// Columns of the log-inverse estimate table, one row per shift.
pub const LOG_INVERSE_COLUMNS: [&str; 6] = ["delta", "c", "mean", "std_error", "is_argmax", "trials"];

/// Columns of the rate and converse table.
pub const BOUNDS_COLUMNS: [&str; 19] = [
    "spec",
    "L",
    "sigma2",
    "snr",
    "power",
    "alpha_L",
    "eps",
    "s_used",
    "pre_limit_rate",
    "asymptotic_rate",
    "rho_lower_bound",
    "converse_rho",
    "converse_l0",
    "beta_tilde",
    "h_minus",
    "delta",
    "eta",
    "converse_k",
    "converse_bound",
];

pub fn sweep_cells(r: &SweepRow) -> Vec<Cell> {
    vec![
        r.spec.as_str().into(),
        r.sigma2.into(),
        r.snr.into(),
        r.period.into(),
        r.n.into(),
        r.messages.into(),
        r.rate_nats.into(),
        r.trials.into(),
        r.errors.into(),
        r.err_prob.into(),
        r.ci_lo.into(),
        r.ci_hi.into(),
        r.ach_rate_pre_limit.into(),
        r.seed.into(),
    ]
}

pub fn concentration_cells(r: &ConcentrationRow) -> Vec<Cell> {
    vec![
        r.n.into(),
        r.m.into(),
        r.mean_y.into(),
        r.mean_z.into(),
        r.target_y.into(),
        r.target_z.into(),
        r.var_y.into(),
        r.var_z.into(),
        r.hit_frac.into(),
        r.eps.into(),
    ]
}

pub fn residual_cells(r: &ResidualRow) -> Vec<Cell> {
    vec![
        r.k.into(),
        r.x.into(),
        r.noise_var.into(),
        r.emp_mean.into(),
        r.emp_var.into(),
        r.trials.into(),
    ]
}

pub fn demo_cells(r: &DemoRow) -> Vec<Cell> {
    vec![
        r.spec.as_str().into(),
        r.sigma2.into(),
        r.snr.into(),
        r.period.into(),
        r.rate_nats.into(),
        r.asymptotic_rate.into(),
    ]
}

pub fn classify_cells(spec: &str, c: &Classification) -> Vec<Cell> {
    vec![
        spec.into(),
        c.horizon.into(),
        c.verdict.to_string().into(),
        c.liminf_ratio_estimate.into(),
        c.limsup_ratio_estimate.into(),
        c.decay_stat.into(),
    ]
}

/// Row of the bounds table; converse columns are empty when no admissible
/// pair exists.
pub fn bounds_cells(spec: &str, snr: f64, rate: &RateReport, converse: Option<&ConverseReport>) -> Vec<Cell> {
    let mut cells: Vec<Cell> = vec![
        spec.into(),
        rate.period.into(),
        rate.sigma2.into(),
        snr.into(),
        rate.power.into(),
        rate.alpha_l.into(),
        rate.eps.into(),
        rate.s_used.into(),
        rate.pre_limit_rate.into(),
        rate.asymptotic_rate.into(),
        rate.rho_lower_bound.into(),
    ];
    match converse {
        Some(c) => cells.extend([
            c.rho.into(),
            c.l0.into(),
            c.beta_tilde.into(),
            c.h_minus_noise.into(),
            c.delta.into(),
            c.eta.into(),
            c.k.into(),
            c.bound.into(),
        ]),
        None => cells.extend(std::iter::repeat_n(Cell::Empty, 8)),
    }
    cells
}
