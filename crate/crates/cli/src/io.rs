//! Feature CSV, labels CSV and JSON report plumbing.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use taa_core::Signal;

use crate::error::CliError;

/// Reads a feature CSV: header `t,c0,…,c{C−1}`, one row per step, `t`
/// strictly increasing from 0.
pub fn read_features(path: &Path) -> Result<Signal, CliError> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{name}: {e}")))?;
    let header = reader.headers().map_err(|e| csv_error(&name, e))?.clone();
    let n_channels = header.len().saturating_sub(1);
    if header.get(0) != Some("t") || n_channels == 0 {
        return Err(CliError::input(format!("{name}: line 1: header must be t,c0,c1,...")));
    }
    for (c, field) in header.iter().skip(1).enumerate() {
        if field != format!("c{c}") {
            return Err(CliError::input(format!("{name}: line 1: column {} is {field:?}, expected c{c}", c + 1)));
        }
    }
    let mut channels = vec![Vec::new(); n_channels];
    let mut last_t: Option<u64> = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&name, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let t: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{name}: line {line}: t {:?} is not an integer", &record[0])))?;
        let ok = match last_t {
            None => t == 0,
            Some(prev) => t > prev,
        };
        if !ok {
            return Err(CliError::input(format!("{name}: line {line}: t must increase strictly from 0")));
        }
        last_t = Some(t);
        for (c, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                CliError::input(format!("{name}: line {line}: c{c} {field:?} is not a finite number"))
            })?;
            channels[c].push(v);
        }
    }
    if channels[0].is_empty() {
        return Err(CliError::input(format!("{name}: no data rows")));
    }
    Signal::from_channels(channels).map_err(|e| CliError::input(format!("{name}: {e}")))
}

fn csv_error(name: &impl std::fmt::Display, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => CliError::input(format!(
            "{name}: line {}: expected {expected_len} fields, found {len}",
            pos.as_ref().map_or(0, |p| p.line())
        )),
        _ => CliError::input(format!("{name}: {e}")),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| CliError::io(path, e))
}

/// Writes `signal` in the feature CSV layout.
pub fn write_features(path: &Path, signal: &Signal) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("t".to_string()).chain((0..signal.n_channels()).map(|c| format!("c{c}")));
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for t in 0..signal.len() {
        let values = signal.row(t);
        let row = std::iter::once(t.to_string()).chain(values.iter().map(|v| v.to_string()));
        w.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Heatmap layout: header `channel,<bin frequencies…>`, then one row per
/// channel holding its index and its per-bin magnitude differences.
pub fn write_heatmap(path: &Path, bin_frequencies: &[f64], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("channel".to_string()).chain(bin_frequencies.iter().map(|f| f.to_string()));
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for (c, row) in rows.iter().enumerate() {
        let rec = std::iter::once(c.to_string()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(rec).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["instance_id", "class_id"]).map_err(|e| CliError::io(path, e))?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()]).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads `labels.csv` as `(instance_id, class_id)` pairs.
pub fn read_labels(path: &Path) -> Result<Vec<(usize, usize)>, CliError> {
    let name = path.display();
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::input(format!("{name}: {e}")))?;
    let header = reader.headers().map_err(|e| csv_error(&name, e))?;
    if header.iter().collect::<Vec<_>>() != ["instance_id", "class_id"] {
        return Err(CliError::input(format!("{name}: line 1: header must be instance_id,class_id")));
    }
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| csv_error(&name, e))?;
            let line = r.position().map_or(0, |p| p.line());
            let field = |i: usize, what: &str| {
                r[i].trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::input(format!("{name}: line {line}: {what} {:?} is not an integer", &r[i])))
            };
            Ok((field(0, "instance_id")?, field(1, "class_id")?))
        })
        .collect()
}

pub fn instance_file(id: usize) -> String {
    format!("instance_{id:04}.csv")
}

/// Parses a JSON file into `T`; errors name the offending field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let field = if at == "." { String::new() } else { format!("field {at}: ") };
        CliError::input(format!("{}: {field}{}", path.display(), e.inner()))
    })
}

/// Writes a report with the shared top-level layout.
pub fn write_report(path: &Path, command: &str, params: impl Serialize, results: Value) -> Result<(), CliError> {
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "params": params,
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Rejects non-finite numbers, which JSON cannot carry.
pub fn finite(what: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::infeasible(format!("{what}: non-finite result {v}"))),
        None => Ok(()),
    }
}
