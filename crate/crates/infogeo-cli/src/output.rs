//! Result and trace serialization.
//!
//! Results are JSON under the versioned `infogeo-em/1` schema; floats
//! are written with 17 significant digits so every double round-trips
//! exactly and golden files stay stable. Traces go to JSONL, one record
//! per iteration.

use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use infogeo::{Direction, Trace};

pub const SCHEMA: &str = "infogeo-em/1";

/// Slack applied when re-validating a trace's monotone invariant.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Compact JSON with `f64` printed as 17 significant digits.
struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter);
    value.serialize(&mut ser).context("serialization failed")?;
    Ok(String::from_utf8(out).expect("serializer emits UTF-8"))
}

/// Writes the result JSON to `path`, or to stdout when absent.
pub fn emit_result<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let json = to_json(value)?;
    match path {
        Some(p) => std::fs::write(p, format!("{json}\n"))
            .with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    iter: usize,
    objective: f64,
    #[serde(flatten)]
    extras: std::collections::BTreeMap<&'a str, f64>,
}

/// Writes one JSONL record per trace iteration.
pub fn write_trace_jsonl(trace: &Trace<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in &trace.records {
        let line = TraceLine {
            iter: record.iteration,
            objective: record.objective,
            extras: record.extras.iter().copied().collect(),
        };
        out.push_str(&to_json(&line)?);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Re-validates the owning module's monotone invariant before the
/// result is written; the flag lands in the result JSON.
pub fn trace_monotone(trace: &Trace<f64>, direction: Direction) -> bool {
    trace.is_monotone(direction, MONOTONE_SLACK)
}

/// Envelope common to every result payload.
#[derive(Serialize)]
pub struct Envelope<P: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub converged: bool,
    pub trace_monotone: bool,
    pub iterations: usize,
    #[serde(flatten)]
    pub payload: P,
}

impl<P: Serialize> Envelope<P> {
    pub fn new(command: &'static str, trace: &Trace<f64>, direction: Direction, payload: P) -> Self {
        Self {
            schema: SCHEMA,
            command,
            converged: trace.converged,
            trace_monotone: trace_monotone(trace, direction),
            iterations: trace.iterations(),
            payload,
        }
    }
}
