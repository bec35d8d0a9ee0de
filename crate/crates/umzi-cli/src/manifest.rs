//! Machine-readable record of one scenario run: which configuration (by
//! hash and by value), which seed, which package versions, and which files
//! were produced. Reruns with the same inputs produce byte-identical
//! manifests — no timestamps, no hostnames.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Serialize)]
struct Versions {
    umzi_cli: &'static str,
    umzi_core: &'static str,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    scenario: &'a str,
    seed: u64,
    /// SHA-256 over the canonical JSON rendering of the effective
    /// configuration (defaults + file + flag overrides).
    config_sha256: &'a str,
    versions: Versions,
    outputs: &'a [String],
}

/// Collects the files a scenario writes into the output directory and
/// finishes with `manifest.json`.
pub struct RunWriter {
    dir: PathBuf,
    scenario: &'static str,
    seed: u64,
    config_sha256: String,
    outputs: Vec<String>,
}

impl RunWriter {
    pub fn new(
        dir: &Path,
        scenario: &'static str,
        config: &ExperimentConfig,
    ) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let mut hasher = Sha256::new();
        hasher.update(config.canonical_json().as_bytes());
        let config_sha256 = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(Self {
            dir: dir.to_path_buf(),
            scenario,
            seed: config.seed,
            config_sha256,
            outputs: Vec::new(),
        })
    }

    /// Opens `name` for writing and records it as an output.
    pub fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file =
            File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(name.to_owned());
        Ok(BufWriter::new(file))
    }

    /// Writes `value` as pretty JSON to `name` and records it.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)
            .with_context(|| format!("serializing {name}"))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            scenario: self.scenario,
            seed: self.seed,
            config_sha256: &self.config_sha256,
            versions: Versions {
                umzi_cli: env!("CARGO_PKG_VERSION"),
                umzi_core: umzi_core::VERSION,
            },
            outputs: &self.outputs,
        };
        let path = self.dir.join("manifest.json");
        let mut w = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        serde_json::to_writer_pretty(&mut w, &manifest).context("serializing manifest")?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::default();
        let mut writer = RunWriter::new(dir.path(), "test", &config).unwrap();
        let mut f = writer.create("data.csv").unwrap();
        writeln!(f, "a,b").unwrap();
        drop(f);
        let path = writer.finish().unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(manifest["scenario"], "test");
        assert_eq!(manifest["seed"], 1);
        assert_eq!(manifest["outputs"], serde_json::json!(["data.csv"]));
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
        assert!(manifest.get("timestamp").is_none());
    }

    #[test]
    fn same_config_same_hash() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::default();
        let a = RunWriter::new(dir.path(), "a", &config).unwrap();
        let b = RunWriter::new(dir.path(), "b", &config).unwrap();
        assert_eq!(a.config_sha256, b.config_sha256);
        let mut changed = ExperimentConfig::default();
        changed.umzi.phi_rad += 0.1;
        let c = RunWriter::new(dir.path(), "c", &changed).unwrap();
        assert_ne!(a.config_sha256, c.config_sha256);
    }
}
