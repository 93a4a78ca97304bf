//! Per-run output directories and their manifests.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Command,
    /// Input label (path or `bundled:<name>`) to sha256 of its bytes.
    pub input_hashes: IndexMap<String, String>,
    /// Output files, relative to the run directory.
    pub outputs: Vec<String>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed manifest {}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything a command produces, held in memory until the run succeeds.
#[derive(Debug)]
pub struct RunOutput {
    command: Command,
    started: DateTime<Utc>,
    inputs: IndexMap<String, String>,
    files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn new(command: &Command) -> Self {
        Self {
            command: command.clone(),
            started: Utc::now(),
            inputs: IndexMap::new(),
            files: Vec::new(),
        }
    }

    pub fn input(&mut self, label: impl Into<String>, bytes: &[u8]) {
        self.inputs.insert(label.into(), sha256_hex(bytes));
    }

    pub fn file(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    /// Run directory name suffix: hash of the config and the input hashes.
    fn content_hash(&self) -> CliResult<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.command)?);
        for (label, hash) in &self.inputs {
            h.update(label.as_bytes());
            h.update(hash.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    /// Creates a fresh run directory under `parent` and writes every file plus
    /// the manifest. Returns the directory.
    pub fn commit(self, parent: &Path) -> CliResult<PathBuf> {
        let hash = self.content_hash()?;
        let stamp = self.started.format("%Y%m%dT%H%M%S%.3fZ");
        fs::create_dir_all(parent)?;
        let base = format!("{stamp}-{}", &hash[..8]);
        let mut dir = parent.join(&base);
        let mut k = 2;
        loop {
            match fs::create_dir(&dir) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    dir = parent.join(format!("{base}-{k}"));
                    k += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            fs::write(dir.join(name), contents)?;
            outputs.push(name.clone());
        }
        let manifest = RunManifest {
            command: self.command.name().to_string(),
            config: self.command,
            input_hashes: self.inputs,
            outputs,
            started: self.started,
            finished: Utc::now(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        fs::write(dir.join(MANIFEST_FILE), json)?;
        Ok(dir)
    }
}
