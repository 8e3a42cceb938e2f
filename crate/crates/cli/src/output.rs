//! Output directory handling: CSV tables, JSON documents, checksums and the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statewalk_core::rng::{DERIVATION, GENERATOR};

/// A CSV table held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// One file written by a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Named stream group used by a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamUse {
    pub purpose: String,
    pub group: u64,
    /// Lanes `(group, 0..lanes)` drawn from.
    pub lanes: u64,
}

impl StreamUse {
    pub fn new(purpose: impl Into<String>, group: u64, lanes: usize) -> Self {
        Self {
            purpose: purpose.into(),
            group,
            lanes: lanes as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub root_seed: u64,
    pub generator: String,
    pub derivation: String,
    pub streams: Vec<StreamUse>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub seed_lineage: SeedLineage,
    /// Data outputs with checksums; the manifest itself is not listed.
    pub outputs: Vec<OutputRecord>,
    pub exit_code: i32,
}

impl SeedLineage {
    pub fn new(root_seed: u64, streams: Vec<StreamUse>) -> Self {
        Self {
            root_seed,
            generator: GENERATOR.to_string(),
            derivation: DERIVATION.to_string(),
            streams,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files under one directory and records their checksums.
pub struct OutputDir {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.records.retain(|r| r.path != rel);
        self.records.push(OutputRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_table(&mut self, table: &Table) -> std::io::Result<()> {
        let bytes = table.to_csv().map_err(std::io::Error::other)?;
        self.write_bytes(&format!("{}.csv", table.name), &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    /// Writes `manifest.json`, which is deliberately excluded from the
    /// checksum list since it carries timestamps.
    pub fn write_manifest(&self, manifest: &RunManifest) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(manifest).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        fs::write(self.root.join("manifest.json"), bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_nothing_for_plain_numbers() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push([1.5, 2.0]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1.5,2\n");
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
