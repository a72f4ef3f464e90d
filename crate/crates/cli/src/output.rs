//! CSV tables with a JSON sidecar holding the configuration echo and the
//! measured constants.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// Float text with 12 significant digits; infinities print as `inf`.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

/// JSON value for a float; non-finite values become strings.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(num(x))
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    fn write_to<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the table to `out` (stdout when absent) and the sidecar next to it.
pub fn emit(out: Option<&Path>, table: &Table, command: &str, config: Map<String, Value>, constants: Map<String, Value>) -> io::Result<()> {
    match out {
        None => table.write_to(io::stdout().lock()),
        Some(path) => {
            table.write_to(fs::File::create(path)?)?;
            let mut doc = Map::new();
            doc.insert("command".into(), Value::from(command));
            doc.insert("config".into(), Value::Object(config));
            doc.insert("constants".into(), Value::Object(constants));
            doc.insert("rows".into(), Value::from(table.len()));
            let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
            text.push('\n');
            fs::write(sidecar_path(path), text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-0.00123456789012345), "-1.23456789012e-3");
    }
}
