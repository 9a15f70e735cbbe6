//! CSV/JSON rendering and the run manifest.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Significant digits kept when a float is written.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] and prints the shortest decimal that
/// reads back as the rounded value.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific notation parses");
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

/// Comma-separated rows with a header, LF line endings.
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()).into())
    }
}

/// Pretty JSON with floats rounded like the CSV outputs.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_value(value).map_err(std::io::Error::other)?;
    round_floats(&mut v);
    let mut out = serde_json::to_vec_pretty(&v).map_err(std::io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

fn round_floats(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = format_float(x).parse().expect("formatted float parses");
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// A named output file held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a serde_json::Value,
    files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Builds `manifest.json` recording the resolved config and a SHA-256 of
/// every artifact.
pub fn manifest(command: &str, config: &serde_json::Value, artifacts: &[Artifact]) -> Result<Artifact> {
    let files = artifacts
        .iter()
        .map(|a| FileEntry {
            name: a.name.clone(),
            sha256: hex::encode(Sha256::digest(&a.bytes)),
        })
        .collect();
    let m = Manifest {
        command,
        config,
        files,
    };
    let mut bytes = serde_json::to_vec_pretty(&m).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    Ok(Artifact::new(MANIFEST_NAME, bytes))
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}
