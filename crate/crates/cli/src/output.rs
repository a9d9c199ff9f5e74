//! CSV traces and run manifests.

use crate::error::{CliError, Result};
use adafix::fixedpoint::IterationTrace;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Optional columns of a trace file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceColumns {
    /// The observed value of each iterate (the duality gap for games).
    pub duality_gap: bool,
    pub distance_to_solution: bool,
    pub elapsed_seconds: bool,
}

pub fn trace_header(cols: TraceColumns) -> Vec<&'static str> {
    let mut h = vec!["iter", "residual_l2", "residual_l1", "min_residual_l2"];
    if cols.duality_gap {
        h.push("duality_gap");
    }
    if cols.distance_to_solution {
        h.push("distance_to_solution");
    }
    if cols.elapsed_seconds {
        h.push("elapsed_seconds");
    }
    h
}

pub fn write_trace(path: &Path, trace: &IterationTrace, cols: TraceColumns) -> Result<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(trace_header(cols)).map_err(csv_err)?;
    let missing = |v: Option<f64>| fmt_float(v.unwrap_or(f64::NAN));
    for r in &trace.records {
        let mut row = vec![r.t.to_string(), fmt_float(r.l2), fmt_float(r.l1), fmt_float(r.min_l2)];
        if cols.duality_gap {
            row.push(missing(r.observed));
        }
        if cols.distance_to_solution {
            row.push(missing(r.dist_l2));
        }
        if cols.elapsed_seconds {
            row.push(fmt_float(r.elapsed));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
