//! File plumbing shared by the pipeline stages: atomic writes, digests,
//! prediction TSVs and the provenance manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::GoldLabel;
use crate::error::{Error, Result};
use crate::model::ProbabilityPair;

/// Writes `bytes` to a sibling temp file and renames it over `path`, so
/// readers see either the old or the new complete file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let ctx = |what: &str| format!("{what} {}", tmp.display());
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(ctx("creating"), e))?;
    f.write_all(bytes).map_err(|e| Error::io(ctx("writing"), e))?;
    f.sync_all().map_err(|e| Error::io(ctx("syncing"), e))?;
    drop(f);
    std::fs::rename(&tmp, path)
        .map_err(|e| Error::io(format!("renaming into {}", path.display()), e))
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::json(format!("serializing {}", path.display()), e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(format!("parsing {}", path.display()), e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(sha256_hex(&bytes))
}

/// One row of a predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub probs: ProbabilityPair,
    pub predicted: GoldLabel,
}

pub const PREDICTIONS_HEADER: &str = "sentence_id\tp_obj\tp_subj\tpredicted_label";

/// `sentence_id ⇥ p_obj ⇥ p_subj ⇥ predicted_label`, header first.
/// Probabilities use the shortest round-trip decimal form.
pub fn serialize_predictions(rows: &[PredictionRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(PREDICTIONS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.id, r.probs.p_obj, r.probs.p_subj, r.predicted
        ));
    }
    out
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_atomic(path, serialize_predictions(rows).as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let content =
        std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == PREDICTIONS_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header `{PREDICTIONS_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(parse_err(i + 1, format!("expected 4 columns, found {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(i + 1, format!("bad probability `{s}`")))
        };
        let probs = ProbabilityPair::new(num(f[1])?, num(f[2])?)
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        let predicted = f[3].parse().map_err(|e: Error| parse_err(i + 1, e.to_string()))?;
        rows.push(PredictionRow {
            id: f[0].to_string(),
            probs,
            predicted,
        });
    }
    Ok(rows)
}

/// Provenance record appended by every pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestLine {
    pub timestamp: u64,
    pub command: String,
    pub argv: Vec<String>,
    /// Input path → sha256 of its content.
    pub inputs: BTreeMap<String, String>,
    pub code_version: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl ManifestLine {
    pub fn new(command: &str, argv: &[String]) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ManifestLine {
            timestamp,
            command: command.to_string(),
            argv: argv.to_vec(),
            inputs: BTreeMap::new(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            details: serde_json::Value::Null,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }
}

/// Appends one JSON line to `manifest.jsonl` in `dir`.
pub fn append_manifest(dir: &Path, line: &ManifestLine) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let path = dir.join("manifest.jsonl");
    let mut json = serde_json::to_string(line).map_err(|e| Error::json("serializing manifest", e))?;
    json.push('\n');
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    f.write_all(json.as_bytes())
        .map_err(|e| Error::io(format!("appending to {}", path.display()), e))
}
