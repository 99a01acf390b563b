//! Deterministic artifact directories.  Every emitted file is recorded with
//! its byte count and SHA-256; `manifest.json` is written last, exactly once,
//! so a directory is complete iff its manifest exists.  Nothing here depends
//! on wall-clock time: identical config and seed reproduce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Command;
use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
struct ToolInfo {
    name: &'static str,
    version: &'static str,
    core_version: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: ToolInfo,
    schema_version: u32,
    command: &'static str,
    /// SHA-256 of the raw config file bytes.
    config_sha256: &'a str,
    seed: u64,
    /// Requested worker threads; 0 means the library default.
    threads: usize,
    /// Measured figures the run is accountable for (residuals, sups, orders).
    tolerances: &'a BTreeMap<String, f64>,
    results: &'a serde_json::Value,
    outputs: &'a [OutputRecord],
}

/// A run directory under construction.  Refuses to open over existing files,
/// accumulates checksummed outputs, and seals itself with the manifest.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        if root.exists() {
            let occupied = fs::read_dir(root)
                .map_err(|e| Failure::Internal(format!("{}: {e}", root.display())))?
                .next()
                .is_some();
            if occupied {
                return Err(Failure::Config(format!(
                    "output directory {} is not empty; each run owns a fresh directory",
                    root.display()
                )));
            }
        } else {
            fs::create_dir_all(root)
                .map_err(|e| Failure::Internal(format!("{}: {e}", root.display())))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Internal(format!("{name}: {e}")))?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Failure::Internal(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Lets core writers emit straight to disk, then records the file bytes.
    pub fn write_with(
        &mut self,
        name: &str,
        writer: impl FnOnce(&Path) -> gkdv_core::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.root.join(name);
        writer(&path).map_err(Failure::from_core)?;
        let bytes = fs::read(&path).map_err(|e| Failure::Internal(format!("{name}: {e}")))?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes `manifest.json` and consumes the directory handle.  The
    /// manifest lists every other file, so it is always the final write.
    pub fn finish(
        mut self,
        command: Command,
        config_sha256: &str,
        seed: u64,
        threads: usize,
        tolerances: &BTreeMap<String, f64>,
        results: &serde_json::Value,
    ) -> Result<(), Failure> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: ToolInfo {
                name: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                core_version: gkdv_core::VERSION,
            },
            schema_version: crate::config::SCHEMA_VERSION,
            command: command.name(),
            config_sha256,
            seed,
            threads,
            tolerances,
            results,
            outputs: &self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| Failure::Internal(format!("manifest: {e}")))?;
        bytes.push(b'\n');
        fs::write(self.root.join("manifest.json"), &bytes)
            .map_err(|e| Failure::Internal(format!("manifest: {e}")))?;
        Ok(())
    }
}
