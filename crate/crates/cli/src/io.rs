//! CSV and JSON artifacts.
//!
//! Profile CSVs share one schema for the simulator and the solver so the
//! comparison tool consumes both: `#`-prefixed `key: value` metadata lines,
//! a header row, then `t,u,rho_mean,rho_se` records. Floats print in the
//! shortest round-trip form, so artifacts are byte-stable across runs.

use crate::{CliError, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// One profile record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub t: f64,
    pub u: f64,
    pub rho_mean: f64,
    pub rho_se: f64,
}

/// Parsed profile CSV: metadata plus rows grouped by snapshot time.
#[derive(Debug, Clone)]
pub struct ProfileCsv {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<ProfileRow>,
}

impl ProfileCsv {
    /// Snapshot times in file order, deduplicated.
    pub fn times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for row in &self.rows {
            if out.last().map_or(true, |&t| t != row.t) {
                out.push(row.t);
            }
        }
        out
    }

    /// All rows of one snapshot, in file order.
    pub fn snapshot(&self, t: f64) -> Vec<ProfileRow> {
        self.rows.iter().copied().filter(|r| r.t == t).collect()
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta
            .get(key)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| CliError::Validation(format!("metadata '{key}' missing or malformed")))
    }

    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| CliError::Validation(format!("metadata '{key}' missing or malformed")))
    }
}

/// Writes a profile CSV with the shared schema.
pub fn write_profile_csv(
    path: &Path,
    meta: &[(&str, String)],
    rows: impl Iterator<Item = ProfileRow>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# schema: 1\n");
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("t,u,rho_mean,rho_se\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{},{}", row.t, row.u, row.rho_mean, row.rho_se);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a profile CSV produced by `write_profile_csv`.
pub fn read_profile_csv(path: &Path) -> Result<ProfileCsv> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !saw_header {
            if line != "t,u,rho_mean,rho_se" {
                return Err(CliError::Validation(format!(
                    "{}: unexpected header '{line}'",
                    path.display()
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Validation(format!(
                "{} line {}: expected 4 fields",
                path.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                CliError::Validation(format!(
                    "{} line {}: '{s}' is not a number",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        rows.push(ProfileRow {
            t: parse(fields[0])?,
            u: parse(fields[1])?,
            rho_mean: parse(fields[2])?,
            rho_se: parse(fields[3])?,
        });
    }
    if !saw_header {
        return Err(CliError::Validation(format!("{}: no header row", path.display())));
    }
    Ok(ProfileCsv { meta, rows })
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("JSON encoding failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Generic CSV with metadata lines and a caller-supplied header.
pub fn write_table_csv(
    path: &Path,
    meta: &[(&str, String)],
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# schema: 1\n");
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let formatted: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", formatted.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}
