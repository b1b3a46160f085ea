//! Result rows shared by every subcommand, as CSV or JSON lines.
//!
//! Column order is fixed by [`COLUMNS`]. Floats are written with 17
//! significant digits so that parsing an emitted file gives back identical
//! bits. Absent numbers are empty CSV cells or JSON `null`; vectors are
//! `;`-joined in CSV and arrays in JSON; empty strings mean "not set".

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::usage(format!("unknown format {s:?} (csv or jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub steps_used: Option<usize>,
    pub seed: Option<u64>,
    pub function: String,
    pub reorth: String,
    pub probes: Option<usize>,
    /// Optimizer step for training trajectories.
    pub step: Option<usize>,
    /// Parameter index for per-parameter rows.
    pub param: Option<usize>,
    pub query: String,
    pub theta: Vec<f64>,
    pub value: Option<f64>,
    pub value_imag: Option<f64>,
    pub reference_value: Option<f64>,
    pub value_rel_error: Option<f64>,
    pub grad: Vec<f64>,
    pub reference_grad: Vec<f64>,
    pub grad_rel_error: Option<f64>,
    pub beta_residual: Option<f64>,
    pub boundary_term: Option<f64>,
    pub error_bound: Option<f64>,
    pub fd_derivative: Option<f64>,
    pub method_error: Option<f64>,
    pub std_error: Option<f64>,
    pub loss: Option<f64>,
    pub param_error: Option<f64>,
    pub wall_time: Option<f64>,
    pub note: String,
}

impl RunRecord {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            n: None,
            m: None,
            steps_used: None,
            seed: None,
            function: String::new(),
            reorth: String::new(),
            probes: None,
            step: None,
            param: None,
            query: String::new(),
            theta: Vec::new(),
            value: None,
            value_imag: None,
            reference_value: None,
            value_rel_error: None,
            grad: Vec::new(),
            reference_grad: Vec::new(),
            grad_rel_error: None,
            beta_residual: None,
            boundary_term: None,
            error_bound: None,
            fd_derivative: None,
            method_error: None,
            std_error: None,
            loss: None,
            param_error: None,
            wall_time: None,
            note: String::new(),
        }
    }
}

pub const COLUMNS: [&str; 30] = [
    "schema_version",
    "experiment",
    "n",
    "m",
    "steps_used",
    "seed",
    "function",
    "reorth",
    "probes",
    "step",
    "param",
    "query",
    "theta",
    "value",
    "value_imag",
    "reference_value",
    "value_rel_error",
    "grad",
    "reference_grad",
    "grad_rel_error",
    "beta_residual",
    "boundary_term",
    "error_bound",
    "fd_derivative",
    "method_error",
    "std_error",
    "loss",
    "param_error",
    "wall_time",
    "note",
];

/// One field value in a format-neutral form.
enum Cell {
    Int(Option<u64>),
    Float(Option<f64>),
    Floats(Vec<f64>),
    Text(String),
}

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn cells(r: &RunRecord) -> [Cell; 30] {
    use Cell::*;
    let int = |x: Option<usize>| Int(x.map(|v| v as u64));
    [
        Int(Some(r.schema_version as u64)),
        Text(r.experiment.clone()),
        int(r.n),
        int(r.m),
        int(r.steps_used),
        Int(r.seed),
        Text(r.function.clone()),
        Text(r.reorth.clone()),
        int(r.probes),
        int(r.step),
        int(r.param),
        Text(r.query.clone()),
        Floats(r.theta.clone()),
        Float(r.value),
        Float(r.value_imag),
        Float(r.reference_value),
        Float(r.value_rel_error),
        Floats(r.grad.clone()),
        Floats(r.reference_grad.clone()),
        Float(r.grad_rel_error),
        Float(r.beta_residual),
        Float(r.boundary_term),
        Float(r.error_bound),
        Float(r.fd_derivative),
        Float(r.method_error),
        Float(r.std_error),
        Float(r.loss),
        Float(r.param_error),
        Float(r.wall_time),
        Text(r.note.clone()),
    ]
}

/// Reads a record back from cells in [`COLUMNS`] order.
fn from_cells(c: Vec<Cell>) -> Result<RunRecord> {
    let mut it = c.into_iter();
    let mut take = || it.next().expect("cell count checked by caller");
    let int = |c: Cell| match c {
        Cell::Int(v) => v,
        _ => unreachable!(),
    };
    let size = |c: Cell| int(c).map(|v| v as usize);
    let float = |c: Cell| match c {
        Cell::Float(v) => v,
        _ => unreachable!(),
    };
    let floats = |c: Cell| match c {
        Cell::Floats(v) => v,
        _ => unreachable!(),
    };
    let text = |c: Cell| match c {
        Cell::Text(v) => v,
        _ => unreachable!(),
    };
    let schema = int(take()).unwrap_or(0);
    if schema != SCHEMA_VERSION as u64 {
        return Err(Error::Format(format!("unsupported schema_version {schema}")));
    }
    Ok(RunRecord {
        schema_version: schema as u32,
        experiment: text(take()),
        n: size(take()),
        m: size(take()),
        steps_used: size(take()),
        seed: int(take()),
        function: text(take()),
        reorth: text(take()),
        probes: size(take()),
        step: size(take()),
        param: size(take()),
        query: text(take()),
        theta: floats(take()),
        value: float(take()),
        value_imag: float(take()),
        reference_value: float(take()),
        value_rel_error: float(take()),
        grad: floats(take()),
        reference_grad: floats(take()),
        grad_rel_error: float(take()),
        beta_residual: float(take()),
        boundary_term: float(take()),
        error_bound: float(take()),
        fd_derivative: float(take()),
        method_error: float(take()),
        std_error: float(take()),
        loss: float(take()),
        param_error: float(take()),
        wall_time: float(take()),
        note: text(take()),
    })
}

/// Kind of each column, used when parsing.
fn column_kinds() -> [Cell; 30] {
    cells(&RunRecord::new(""))
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.map(|x| x.to_string()).unwrap_or_default(),
        Cell::Float(v) => v.map(format_float).unwrap_or_default(),
        Cell::Floats(v) => v.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(";"),
        Cell::Text(s) => s.clone(),
    }
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        format!("\"{}\"", format_float(x))
    }
}

fn json_line(r: &RunRecord) -> Result<String> {
    let mut out = String::from("{");
    for (k, (name, c)) in COLUMNS.iter().zip(cells(r)).enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push('"');
        out.push_str(name);
        out.push_str("\":");
        match c {
            Cell::Int(v) => out.push_str(&v.map(|x| x.to_string()).unwrap_or_else(|| "null".into())),
            Cell::Float(v) => out.push_str(&v.map(json_float).unwrap_or_else(|| "null".into())),
            Cell::Floats(v) => {
                out.push('[');
                out.push_str(&v.iter().map(|&x| json_float(x)).collect::<Vec<_>>().join(","));
                out.push(']');
            }
            Cell::Text(s) => out.push_str(&serde_json::to_string(&s)?),
        }
    }
    out.push('}');
    Ok(out)
}

/// Writes records in the chosen format. Output is a pure function of the
/// records, so equal inputs give equal bytes.
pub fn write_records<W: Write>(records: &[RunRecord], format: Format, w: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(COLUMNS)?;
            for r in records {
                wr.write_record(cells(r).iter().map(csv_cell))?;
            }
            wr.flush().map_err(|e| Error::io("<output>", e))?;
        }
        Format::Jsonl => {
            let mut w = w;
            for r in records {
                writeln!(w, "{}", json_line(r)?).map_err(|e| Error::io("<output>", e))?;
            }
            w.flush().map_err(|e| Error::io("<output>", e))?;
        }
    }
    Ok(())
}

/// Writes records to `path`, or to stdout when `path` is `-`.
pub fn emit_records(records: &[RunRecord], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.as_os_str() == "-" {
        let stdout = std::io::stdout();
        return write_records(records, format, stdout.lock());
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, format, BufWriter::new(file))
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad float {s:?}"))
}

fn parse_csv_cell(kind: &Cell, s: &str) -> std::result::Result<Cell, String> {
    Ok(match kind {
        Cell::Int(_) if s.is_empty() => Cell::Int(None),
        Cell::Int(_) => Cell::Int(Some(s.parse().map_err(|_| format!("bad integer {s:?}"))?)),
        Cell::Float(_) if s.is_empty() => Cell::Float(None),
        Cell::Float(_) => Cell::Float(Some(parse_float(s)?)),
        Cell::Floats(_) if s.is_empty() => Cell::Floats(Vec::new()),
        Cell::Floats(_) => Cell::Floats(s.split(';').map(parse_float).collect::<std::result::Result<_, _>>()?),
        Cell::Text(_) => Cell::Text(s.to_string()),
    })
}

fn json_to_float(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Number(x) => x.as_f64().ok_or_else(|| format!("bad number {x}")),
        Value::String(s) => parse_float(s),
        _ => Err(format!("expected a number, found {v}")),
    }
}

fn parse_json_cell(kind: &Cell, v: &Value) -> std::result::Result<Cell, String> {
    Ok(match (kind, v) {
        (Cell::Int(_), Value::Null) => Cell::Int(None),
        (Cell::Int(_), _) => Cell::Int(Some(v.as_u64().ok_or_else(|| format!("bad integer {v}"))?)),
        (Cell::Float(_), Value::Null) => Cell::Float(None),
        (Cell::Float(_), _) => Cell::Float(Some(json_to_float(v)?)),
        (Cell::Floats(_), Value::Array(a)) => {
            Cell::Floats(a.iter().map(json_to_float).collect::<std::result::Result<_, _>>()?)
        }
        (Cell::Text(_), Value::String(s)) => Cell::Text(s.clone()),
        _ => return Err(format!("unexpected value {v}")),
    })
}

/// Parses records written by [`write_records`].
pub fn parse_records<R: BufRead>(reader: R, format: Format) -> Result<Vec<RunRecord>> {
    let kinds = column_kinds();
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut rd = csv::Reader::from_reader(reader);
            let header = rd.headers()?.clone();
            if !header.iter().eq(COLUMNS.iter().copied()) {
                return Err(Error::Format("CSV header does not match the record columns".into()));
            }
            for (k, row) in rd.records().enumerate() {
                let row = row?;
                let line = k + 2;
                let cells = kinds
                    .iter()
                    .zip(row.iter())
                    .map(|(kind, s)| parse_csv_cell(kind, s))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|m| Error::parse("<csv>", line, m))?;
                out.push(from_cells(cells)?);
            }
        }
        Format::Jsonl => {
            for (k, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io("<jsonl>", e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let v: Value = serde_json::from_str(&line)?;
                let obj = v
                    .as_object()
                    .ok_or_else(|| Error::parse("<jsonl>", k + 1, "expected a JSON object"))?;
                if obj.len() != COLUMNS.len() {
                    return Err(Error::parse("<jsonl>", k + 1, "unexpected set of fields"));
                }
                let cells = COLUMNS
                    .iter()
                    .zip(&kinds)
                    .map(|(name, kind)| {
                        let v = obj.get(*name).ok_or_else(|| format!("missing field {name}"))?;
                        parse_json_cell(kind, v).map_err(|m| format!("{name}: {m}"))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|m| Error::parse("<jsonl>", k + 1, m))?;
                out.push(from_cells(cells)?);
            }
        }
    }
    Ok(out)
}
