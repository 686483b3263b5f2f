//! Table serialization: sweep rows and reports to CSV/JSON, series files
//! in and out.
//!
//! CSV columns are a fixed contract:
//! `sweep_value,xi_hat,xi_sd,mu_hat,mu_sd,sigma_hat,sigma_sd,predicted_xi,n_iterates`.
//! Floats are written with 17 significant digits so re-reading reproduces
//! them bit for bit; a missing prediction is an empty cell in CSV and null
//! in JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::gevfit::EstimateReport;
use crate::harness::SweepRow;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "sweep_value,xi_hat,xi_sd,mu_hat,mu_sd,sigma_hat,sigma_sd,predicted_xi,n_iterates";

/// A float with 17 significant digits, enough to reproduce any f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render sweep rows as CSV text (header always included).
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let predicted = row.predicted_xi.map(format_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            format_float(row.sweep_value),
            format_float(row.xi_hat),
            format_float(row.xi_sd),
            format_float(row.mu_hat),
            format_float(row.mu_sd),
            format_float(row.sigma_hat),
            format_float(row.sigma_sd),
            predicted,
            row.n_iterates,
        ));
    }
    out
}

/// Sweep rows as pretty JSON (field names match [`SweepRow`]).
pub fn sweep_to_json(rows: &[SweepRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn sweep_from_json(text: &str) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_str(text)?)
}

pub fn report_to_json(report: &EstimateReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

fn annotate_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Write text to a file, surfacing the path in any I/O error.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| annotate_path(e, path))
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| annotate_path(e, path))?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|e| annotate_path(e, path))?;
    Ok(text)
}

/// Read a series file: one value per line, blank lines and `#` comments
/// skipped. Line numbers in errors are 1-based.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| annotate_path(e, path))?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| annotate_path(e, path))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::ParseValue {
            line: idx + 1,
            text: t.to_string(),
        })?;
        values.push(v);
    }
    Ok(values)
}

/// Write a series file with `#`-prefixed comment lines first.
pub fn write_series(path: &Path, comments: &[String], values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| annotate_path(e, path))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| annotate_path(e, path);
    for c in comments {
        writeln!(w, "# {c}").map_err(io)?;
    }
    for v in values {
        writeln!(w, "{}", format_float(*v)).map_err(io)?;
    }
    w.flush().map_err(io)
}
