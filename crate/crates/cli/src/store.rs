use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{digest_of, SCHEMA_VERSION};
use crate::error::CliError;

/// Files produced by one command plus a small summary kept in the manifest.
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
}

/// A completed result directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub dir: PathBuf,
    pub digest: String,
    pub manifest: Value,
    pub cached: bool,
}

impl Artifact {
    pub fn summary(&self) -> &Value {
        &self.manifest["summary"]
    }

    pub fn read(&self, name: &str) -> Result<String, CliError> {
        let path = self.dir.join(name);
        fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    }
}

/// Result cache rooted at the output directory. Each command writes to
/// `<root>/<command>-<first 12 hex digits of its digest>/`.
pub struct Store {
    root: PathBuf,
    force: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

impl Store {
    pub fn new(root: impl Into<PathBuf>, force: bool) -> Self {
        Self { root: root.into(), force }
    }

    /// Returns the cached artifact for `key`, or runs `compute` and stores
    /// its output. `parameters` and `inputs` are recorded in the manifest.
    pub fn run(
        &self,
        command: &str,
        key: &Value,
        parameters: &Value,
        inputs: BTreeMap<String, String>,
        compute: impl FnOnce(&str) -> Result<Output, CliError>,
    ) -> Result<Artifact, CliError> {
        let digest = digest_of(&json!({ "command": command, "schema_version": SCHEMA_VERSION, "key": key }));
        let dir = self.root.join(format!("{command}-{}", &digest[..12]));
        if !self.force {
            match verify(&dir, &digest) {
                Ok(Some(manifest)) => return Ok(Artifact { dir, digest, manifest, cached: true }),
                Ok(None) => {}
                Err(e) => eprintln!("warning: {e}; recomputing"),
            }
        }
        let out = compute(&digest)?;
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut files = BTreeMap::new();
        for (name, bytes) in &out.files {
            write_atomic(&dir.join(name), bytes)?;
            files.insert(name.clone(), sha256_hex(bytes));
        }
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "digest": digest,
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "parameters": parameters,
            "inputs": inputs,
            "files": files,
            "summary": out.summary,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        // the manifest goes last: its presence marks a complete directory
        write_atomic(&dir.join("manifest.json"), text.as_bytes())?;
        Ok(Artifact { dir, digest, manifest, cached: false })
    }
}

/// `Ok(None)` when nothing is cached, `Err(CacheCorrupt)` when a manifest
/// exists but does not match its digest or its files.
fn verify(dir: &Path, digest: &str) -> Result<Option<Value>, CliError> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Ok(None);
    }
    let corrupt = |reason: String| CliError::CacheCorrupt { dir: dir.display().to_string(), reason };
    let text = fs::read_to_string(&path).map_err(|e| corrupt(e.to_string()))?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| corrupt(format!("manifest: {e}")))?;
    if manifest["digest"] != digest {
        return Err(corrupt("manifest digest does not match the config".into()));
    }
    if manifest["schema_version"] != SCHEMA_VERSION {
        return Err(corrupt("manifest schema version differs".into()));
    }
    let files = manifest["files"].as_object().ok_or_else(|| corrupt("manifest lists no files".into()))?;
    for (name, hash) in files {
        let bytes = fs::read(dir.join(name)).map_err(|e| corrupt(format!("{name}: {e}")))?;
        if hash.as_str() != Some(sha256_hex(&bytes).as_str()) {
            return Err(corrupt(format!("{name} does not match its recorded digest")));
        }
    }
    Ok(Some(manifest))
}
