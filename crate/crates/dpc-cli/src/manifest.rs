//! Simulation manifest: what was generated, where it lives, and the
//! checksums that gate any downstream compute.

use crate::config::SimulateConfig;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub config: SimulateConfig,
    pub phantom_file: FileEntry,
    pub dpc_files: Vec<FileEntry>,
    pub dpc_noisy_files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = &FileEntry> {
        std::iter::once(&self.phantom_file)
            .chain(self.dpc_files.iter())
            .chain(self.dpc_noisy_files.iter())
    }

    /// Abort before any compute if a referenced file is missing or stale.
    pub fn verify_checksums(&self, base_dir: &Path) -> Result<()> {
        for entry in self.entries() {
            let path = base_dir.join(&entry.path);
            let actual = sha256_file(&path)?;
            if actual != entry.sha256 {
                bail!(
                    "stale checksum for {}: manifest says {}, file hashes to {actual}",
                    entry.path,
                    entry.sha256
                );
            }
        }
        Ok(())
    }

    pub fn resolve(&self, base_dir: &Path, entry: &FileEntry) -> PathBuf {
        base_dir.join(&entry.path)
    }
}
