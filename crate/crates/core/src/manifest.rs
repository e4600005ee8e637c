//! Per-directory record of how each output was produced.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::hex_digest;
use crate::corpus::{read_json, write_json};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Keyed by output name.
    pub outputs: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    /// Input path as given -> SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
}

/// SHA-256 of a file, or of the sorted `(name, file hash)` listing of a
/// directory's files.
pub fn hash_path(path: &Path) -> Result<String> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if !meta.is_dir() {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        return Ok(hex_digest(&bytes));
    }
    let mut listing = BTreeMap::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.is_file() {
            listing.insert(entry.file_name().to_string_lossy().into_owned(), hash_path(&p)?);
        }
    }
    let text: String = listing.iter().map(|(n, h)| format!("{n}\t{h}\n")).collect();
    Ok(hex_digest(text.as_bytes()))
}

/// Adds or replaces the entry for `output` in the directory's manifest.
pub fn record(
    dir: &Path,
    output: &str,
    command: &str,
    config_sha256: Option<String>,
    inputs: &[&Path],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let mut manifest: RunManifest = if path.exists() {
        read_json(&path)?
    } else {
        RunManifest::default()
    };
    manifest.tool_version = env!("CARGO_PKG_VERSION").to_string();
    let mut hashes = BTreeMap::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), hash_path(p)?);
    }
    manifest.outputs.insert(
        output.to_string(),
        ManifestEntry {
            command: command.to_string(),
            config_sha256,
            inputs: hashes,
        },
    );
    write_json(&path, &manifest)
}
