//! Machine-readable run manifests. The `args` list is the fully
//! resolved flag set, so rerunning `aimix <args>` reproduces every
//! artifact byte-for-byte.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub args: Vec<String>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &'static str, args: Vec<String>, config: serde_json::Value) -> Self {
        Manifest {
            tool: "aimix",
            version: env!("CARGO_PKG_VERSION"),
            command,
            args,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes =
            std::fs::read(path).with_context(|| format!("hashing input {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: hex,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }
}
