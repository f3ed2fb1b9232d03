//! Output sinks: CSV with `# ` metadata lines, or a single JSON document.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Run metadata written at the top of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
}

impl Meta {
    /// `config` is the resolved argument struct; the command line is rebuilt
    /// from it so that re-running it reproduces the data rows.
    pub fn new<T: Serialize>(subcommand: &str, config: &T) -> Self {
        let config = serde_json::to_value(config).expect("config serialises");
        Self {
            tool: "lcqnn",
            version: env!("CARGO_PKG_VERSION"),
            command: command_line(subcommand, &config),
            config,
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => Some(items.iter().filter_map(scalar).collect::<Vec<_>>().join(",")),
        _ => None,
    }
}

fn command_line(subcommand: &str, config: &Value) -> String {
    let mut parts = vec!["lcqnn".to_string(), subcommand.to_string()];
    if let Value::Object(map) = config {
        for (key, v) in map {
            match v {
                Value::Bool(true) => parts.push(format!("--{key}")),
                Value::Bool(false) | Value::Null => {}
                other => {
                    if let Some(s) = scalar(other) {
                        parts.push(format!("--{key}"));
                        parts.push(s);
                    }
                }
            }
        }
    }
    parts.join(" ")
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_header(w: &mut dyn Write, meta: &Meta) -> io::Result<()> {
    writeln!(w, "# {} {}", meta.tool, meta.version)?;
    writeln!(w, "# command: {}", meta.command)?;
    writeln!(w, "# config: {}", meta.config)
}

/// Writes serialisable flat records.
pub fn write_records<T: Serialize>(
    out: Option<&Path>,
    format: Format,
    meta: &Meta,
    records: &[T],
    summary: Option<Value>,
) -> io::Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            write_header(&mut w, meta)?;
            let mut csv = csv::Writer::from_writer(&mut w);
            for r in records {
                csv.serialize(r).map_err(io::Error::other)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            let mut doc = json!({ "meta": meta, "records": records });
            if let Some(s) = summary {
                doc["summary"] = s;
            }
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Writes pre-formatted CSV rows under an explicit header.
pub fn write_rows(out: Option<&Path>, meta: &Meta, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = sink(out)?;
    write_header(&mut w, meta)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(header).map_err(io::Error::other)?;
    for r in rows {
        csv.write_record(r).map_err(io::Error::other)?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()
}

pub fn write_json(out: Option<&Path>, doc: &Value) -> io::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()
}
