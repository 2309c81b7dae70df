use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Output};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A fixed-column CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.header).map_err(csv_error)?;
        for row in &self.rows {
            csv.write_record(row).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

/// One output document: JSON data plus its CSV rendering.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// Distinguishes several outputs of one run, e.g. `link` and `ring`.
    pub label: Option<String>,
    pub data: Value,
    pub table: Table,
}

/// Formats a float for CSV with the shortest round-trip digits; non-finite
/// values become empty fields.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        String::new()
    } else if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// `out.json` with label `ring` becomes `out_ring.json`.
fn labelled_path(path: &str, label: &str) -> PathBuf {
    let p = Path::new(path);
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match p.extension() {
        Some(ext) => format!("{stem}_{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{label}"),
    };
    p.with_file_name(name)
}

fn document<C: Serialize>(command: &str, config: &C, artifact: &Artifact) -> Value {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
    });
    if let Some(label) = &artifact.label {
        doc["label"] = json!(label);
    }
    doc["data"] = artifact.data.clone();
    doc
}

fn write_one<C: Serialize, W: Write>(command: &str, config: &C, artifact: &Artifact, format: Format, mut w: W) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &document(command, config, artifact)).map_err(io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
        Format::Csv => artifact.table.write_to(w),
    }
}

/// Writes the artifacts to `--out` (one file per label) or to standard output.
pub fn emit<C: Serialize>(command: &str, config: &C, artifacts: &[Artifact], output: &Output) -> Result<Vec<PathBuf>, CliError> {
    let several = artifacts.len() > 1;
    match &output.out {
        Some(path) => {
            let mut written = Vec::new();
            for a in artifacts {
                let target = match (&a.label, several) {
                    (Some(label), true) => labelled_path(path, label),
                    _ => PathBuf::from(path),
                };
                let file = fs::File::create(&target)?;
                write_one(command, config, a, output.format, io::BufWriter::new(file))?;
                written.push(target);
            }
            Ok(written)
        }
        None => {
            if several && output.format == Format::Csv {
                return Err(CliError::Usage("--out is required when CSV output has several parts".into()));
            }
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for a in artifacts {
                write_one(command, config, a, output.format, &mut lock)?;
            }
            Ok(Vec::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_go_before_the_extension() {
        assert_eq!(labelled_path("dir/out.json", "ring"), PathBuf::from("dir/out_ring.json"));
        assert_eq!(labelled_path("out", "link"), PathBuf::from("out_link"));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-2.5e-24), "-2.5e-24");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
