//! Report envelope and writers. JSON floats are printed with 17 significant
//! digits so identical runs give byte-identical files.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 4] = ["schema_version", "command", "key", "value"];
pub const CHECK_CSV_COLUMNS: [&str; 6] = ["schema_version", "criterion", "check", "value", "limit", "passed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Fixed17<'a>(PrettyFormatter<'a>);

impl Fixed17<'_> {
    pub fn new() -> Self {
        Fixed17(PrettyFormatter::new())
    }
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        // Drop the sign of negative zero.
        let value = value + 0.0;
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17::new());
    serde::Serialize::serialize(v, &mut ser).expect("serializing a Value cannot fail");
    out.push(b'\n');
    out
}

pub fn envelope(command: &str, seed: u64, params: Value, result: Value) -> Value {
    let cfg = opmean::config::get();
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "tolerances": {
            "eig_zero_tol": cfg.eig_zero_tol,
            "psd_tol": cfg.psd_tol,
            "dim_cap": cfg.dim_cap,
        },
        "params": params,
        "result": result,
    })
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{:.16e}", x + 0.0),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&format!("{prefix}/{k}"), x, rows);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}/{i}"), x, rows);
            }
        }
        leaf => rows.push((prefix.to_string(), scalar_text(leaf))),
    }
}

/// Key/value rows addressed by JSON pointer, one per leaf of the report.
pub fn to_csv_bytes(report: &Value) -> io::Result<Vec<u8>> {
    let command = report["command"].as_str().unwrap_or_default().to_string();
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for (k, v) in rows {
        w.write_record([SCHEMA_VERSION.to_string(), command.clone(), k, v])?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// One row per check for reproduction reports.
pub fn checks_to_csv_bytes(criteria: &[Value]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CHECK_CSV_COLUMNS)?;
    for c in criteria {
        let id = c["id"].to_string();
        for ch in c["checks"].as_array().into_iter().flatten() {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                id.clone(),
                scalar_text(&ch["name"]),
                scalar_text(&ch["value"]),
                scalar_text(&ch["limit"]),
                scalar_text(&ch["passed"]),
            ])?;
        }
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// Writes to `<dir>/<command>.<ext>` or stdout.
pub fn emit(bytes: &[u8], command: &str, format: Format, out: Option<&Path>) -> io::Result<Option<PathBuf>> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let path = dir.join(format!("{command}.{ext}"));
            std::fs::write(&path, bytes)?;
            Ok(Some(path))
        }
        None => {
            io::stdout().write_all(bytes)?;
            Ok(None)
        }
    }
}
