//! Output tables with fixed headers, written as CSV or as a JSON mirror.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{Format, OutputKind};
use crate::error::Result;

pub const KAPPA_COLUMNS: &[&str] = &[
    "sigma_w2",
    "sigma_b2",
    "depth",
    "phase",
    "ntk_kappa",
    "ntk_kappa_bulk",
    "ntk_kappa_pred",
    "ntk_kappa_residual",
    "nngp_kappa",
    "nngp_kappa_bulk",
    "nngp_kappa_pred",
    "nngp_kappa_residual",
    "error",
];

pub const SPECTRUM_COLUMNS: &[&str] = &[
    "sigma_w2",
    "sigma_b2",
    "depth",
    "phase",
    "ntk_lambda_max",
    "ntk_lambda_bulk",
    "ntk_lambda_min",
    "ntk_lambda_max_pred",
    "ntk_lambda_bulk_pred",
    "nngp_lambda_max",
    "nngp_lambda_bulk",
    "nngp_lambda_min",
    "nngp_lambda_max_pred",
    "nngp_lambda_bulk_pred",
    "eta_max",
    "error",
];

pub const DECAY_COLUMNS: &[&str] = &[
    "sigma_w2",
    "sigma_b2",
    "depth",
    "phase",
    "ntk_norm",
    "nngp_norm",
    "ntk_norm_scale_pred",
    "nngp_norm_scale_pred",
    "error",
];

pub const DYNAMICS_COLUMNS: &[&str] = &[
    "sigma_w2",
    "sigma_b2",
    "depth",
    "time",
    "eta",
    "train_residual",
    "test_output_norm",
    "error",
];

pub const PHASE_COLUMNS: &[&str] = &[
    "kind", "sigma_w2", "sigma_b2", "qstar", "cstar", "chi1", "chi_c", "phase", "xi1", "xi_c",
    "xi_star", "error",
];

pub fn columns(kind: OutputKind) -> &'static [&'static str] {
    match kind {
        OutputKind::Kappa => KAPPA_COLUMNS,
        OutputKind::Spectrum => SPECTRUM_COLUMNS,
        OutputKind::PredictorDecay => DECAY_COLUMNS,
        OutputKind::PhaseDiagram => PHASE_COLUMNS,
        OutputKind::DynamicsTrace => DYNAMICS_COLUMNS,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }

    /// CSV text: 17 significant digits, `inf`/`-inf`/`NaN` for non-finite
    /// values and an empty field when missing.
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    /// JSON value: non-finite numbers become the strings used in CSV.
    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::String(self.to_csv()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: OutputKind,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: OutputKind) -> Self {
        Table {
            kind,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        columns(self.kind)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns().iter().position(|c| *c == name)
    }

    /// Values of one column, `None` where missing or textual.
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.column_index(name).expect("known column");
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    /// Rows whose `error` field is nonempty.
    pub fn failures(&self) -> usize {
        let i = self.column_index("error").expect("every table has an error column");
        self.rows
            .iter()
            .filter(|r| !matches!(&r[i], Cell::Missing) && r[i] != Cell::Text(String::new()))
            .count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(self.columns())?;
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns().len());
            out.write_record(row.iter().map(Cell::to_csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns()
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "table": self.kind.name(), "columns": self.columns(), "rows": rows })
    }

    /// Writes `<dir>/<name>.csv` or `<dir>/<name>.json`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = dir.join(format!("{}.{ext}", self.kind.name()));
        let mut w = BufWriter::new(File::create(&path)?);
        match format {
            Format::Csv => self.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &self.to_json())?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
        Ok(path)
    }
}
