//! Output records. Every artifact carries the resolved config and the
//! library version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Precondition(format!("cannot write output: {e}"))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Opens `-o` or stdout.
pub fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(format!("{}: {e}", p.display())))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// The record wrapped around every JSON result.
pub fn envelope(cfg: &RunConfig, status: &str, error: Option<String>, result: Value) -> Value {
    let mut rec = json!({
        "torushu_version": torushu::VERSION,
        "command": cfg.command,
        "status": status,
        "config": cfg,
        "result": result,
    });
    if let Some(e) = error {
        rec["error"] = Value::String(e);
    }
    if cfg.timestamp() {
        rec["timestamp"] = json!(now());
    }
    rec
}

pub fn write_json(cfg: &RunConfig, record: &Value) -> Result<(), CliError> {
    let mut out = sink(cfg)?;
    serde_json::to_writer_pretty(&mut out, record).map_err(io_err)?;
    writeln!(out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn emit<T: Serialize>(cfg: &RunConfig, result: &T) -> Result<(), CliError> {
    let v = serde_json::to_value(result).map_err(io_err)?;
    write_json(cfg, &envelope(cfg, "ok", None, v))
}

/// Writes the partial result of a capped computation and returns the error
/// that sets exit status 3.
pub fn emit_partial(cfg: &RunConfig, err: torushu::Error, result: Value) -> CliError {
    match write_json(cfg, &envelope(cfg, "numeric_cap", Some(err.to_string()), result)) {
        Ok(()) => CliError::Partial(err),
        Err(e) => e,
    }
}

/// `#` lines carrying the version and config, for CSV artifacts.
pub fn csv_preamble(cfg: &RunConfig) -> Result<String, CliError> {
    let mut s = format!(
        "# torushu_version={}, config={}\n",
        torushu::VERSION,
        serde_json::to_string(cfg).map_err(io_err)?
    );
    if cfg.timestamp() {
        s.push_str(&format!("# timestamp={}\n", now()));
    }
    Ok(s)
}
