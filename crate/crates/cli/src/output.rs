//! Run directory writer. Every artifact is recorded with its SHA-256 so the
//! manifest can certify byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    label: &'a str,
    seed: u64,
    config_sha256: String,
    artifacts: &'a [ArtifactEntry],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    /// Creates `<outdir>/<experiment>/<label>/`.
    pub fn create(outdir: &Path, experiment: &str, label: &str) -> Result<Self, CliError> {
        let root = outdir.join(experiment).join(label);
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self {
            root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ArtifactEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    /// Renders through a core writer (CSV or JSON) into memory first, so the
    /// checksum covers exactly what lands on disk.
    pub fn write_with<F>(&mut self, name: &str, render: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> phonon_core::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, &buf)
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish(&mut self, experiment: &str, label: &str, seed: u64, config_text: &str) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            experiment,
            label,
            seed,
            config_sha256: sha256_hex(config_text.as_bytes()),
            artifacts: &self.entries,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Plain CSV text from a header and rows of numbers.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
