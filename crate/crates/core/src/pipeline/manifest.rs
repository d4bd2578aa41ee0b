use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a file layout changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub schema_version: u32,
    pub command: String,
    /// Hash of command, config, inputs and seed; identical for reproduced runs.
    pub run_id: String,
    pub config_hash: String,
    pub data_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputEntry>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    /// `inputs` are hashed in the given order into `data_hash`.
    pub fn start(command: &str, config_text: &str, inputs: &[PathBuf], seed: u64) -> Result<Self> {
        let mut data = Sha256::new();
        for p in inputs {
            data.update(file_sha256(p)?.as_bytes());
        }
        let data_hash: String = data.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let config_hash = sha256_hex(config_text.as_bytes());
        let run_id = sha256_hex(format!("{command}\n{config_hash}\n{data_hash}\n{seed}").as_bytes())[..16].to_string();
        Ok(RunManifest {
            artifact_version: ARTIFACT_VERSION.to_string(),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            run_id,
            config_hash,
            data_hash,
            seed,
            started_unix: now(),
            finished_unix: 0,
            outputs: Vec::new(),
        })
    }

    /// Records an output file (relative to `dir`) with its hash.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: file_sha256(&dir.join(name))?,
        });
        Ok(())
    }

    pub fn finish(mut self, dir: &Path) -> Result<RunManifest> {
        self.finished_unix = now();
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self)
            .map_err(|e| Error::InvalidInput(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(self)
    }
}
