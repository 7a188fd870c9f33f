//! Deterministic artifact writers. Identical config and seed must reproduce
//! every output byte: floats go through `{:.17e}` in CSV and shortest
//! round-trip in JSON, and JSON object keys are sorted by construction.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::Config;

pub const SCHEMA_VERSION: u32 = 1;

/// Summary skeleton shared by every command: schema version, the command
/// name, the full effective config, the seed, and command-specific results.
pub fn summary(command: &str, config: &Config, seed: u64, results: Value) -> Value {
    let mut cfg = Map::new();
    for (k, v) in config.iter() {
        cfg.insert(k.to_string(), Value::String(v.to_string()));
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "seed": seed,
        "results": results,
    })
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Full-precision float field for CSV rows.
pub fn csv_float(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_csv<W: Write>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}
