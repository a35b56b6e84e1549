//! Run directories: every command persists its outputs together with a
//! manifest (config snapshot, seed, inputs, crate version) sufficient to
//! reproduce the run from nothing but the directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::formats::{self, FORMAT_VERSION};
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }
}

/// Create the run directory and return it.
pub fn prepare(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    formats::write_json(&dir.join("manifest.json"), manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    formats::read_json(&dir.join("manifest.json"))
}

/// Wall-clock diagnostic sidecar; excluded from the determinism contract.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub runtime_ms: u64,
}

pub fn write_timing(dir: &Path, runtime_ms: u64) -> Result<()> {
    formats::write_json(&dir.join("timing.json"), &Timing { runtime_ms })
}

pub fn read_timing(dir: &Path) -> Option<Timing> {
    formats::read_json(&dir.join("timing.json")).ok()
}
