//! Report emission.
//!
//! Every command writes one JSON report carrying full provenance (input
//! digests, parameters, seed, tool version) plus CSV side tables. Numbers are
//! rounded to 12 significant digits; rerunning with identical inputs and seed
//! reproduces the report byte for byte apart from the timestamp field.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::num::sig12;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub generated_unix_time: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl Provenance {
    pub fn new(command: &str, seed: Option<u64>, digests: &[(String, String)]) -> Self {
        Provenance {
            tool: "peakmix".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            generated_unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            inputs: digests
                .iter()
                .map(|(path, sha256)| InputDigest {
                    path: path.clone(),
                    sha256: sha256.clone(),
                })
                .collect(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Round every number in a JSON value to 12 significant digits.
fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig12(f)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Serialize a report to canonical JSON: sorted object keys (serde_json's
/// default map), numbers at 12 significant digits, two-space indentation.
pub fn to_report_json(provenance: &Provenance, result: &impl Serialize) -> Result<String> {
    let mut value = serde_json::json!({
        "provenance": serde_json::to_value(provenance)
            .map_err(|e| Error::Numeric(format!("report serialization failed: {e}")))?,
        "result": serde_json::to_value(result)
            .map_err(|e| Error::Numeric(format!("report serialization failed: {e}")))?,
    });
    round_numbers(&mut value);
    serde_json::to_string_pretty(&value)
        .map_err(|e| Error::Numeric(format!("report serialization failed: {e}")))
}

/// Writer for the per-command output directory.
pub struct ReportWriter {
    dir: PathBuf,
}

impl ReportWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ReportWriter {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json(&self, provenance: &Provenance, result: &impl Serialize) -> Result<PathBuf> {
        let path = self.path("report.json");
        std::fs::write(&path, to_report_json(provenance, result)?)?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// Write a CSV side table; cells are already formatted.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }
}

/// Decimal with 12 significant digits for CSV cells.
pub fn fmt_sig(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        return "-inf".to_string();
    }
    if v == f64::INFINITY {
        return "inf".to_string();
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    format!("{:.11e}", v)
}
