use std::path::Path;

use serde_json::Value;

use crate::error::CliError;
use crate::ops::Table;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

/// RFC 4180 CSV with a header row and `\n` line ends.
pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(path, e))?;
    w.write_record(&table.header).map_err(|e| io(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Pretty-printed UTF-8 JSON; non-finite numbers become `null`.
pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io(path, e))
}
