//! Byte-deterministic CSV output.
//!
//! Floats are rendered with 17 significant digits in scientific notation,
//! which round-trips every finite f64 exactly and keeps regression baselines
//! diffable. Lines end with `\n`; the encoding is UTF-8 throughout.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

/// Full-precision scientific rendering, e.g. `1.0000000000000001e-1`.
pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes a header plus rectangular rows as CSV. An empty row set produces a
/// header-only file. Identical inputs produce byte-identical files.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "rows must match the header width");
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text.as_bytes())
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
