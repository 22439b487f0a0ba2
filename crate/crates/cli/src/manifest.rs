use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hfpoint::protocol::{Protocol, PROTOCOL};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub protocol: Protocol,
    pub inputs: BTreeMap<String, InputDigest>,
    pub seed: Option<u64>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self, Failure> {
        Ok(RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            config: serde_json::to_value(config).map_err(|e| Failure::internal(e.into()))?,
            protocol: PROTOCOL,
            inputs: BTreeMap::new(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), Failure> {
        let bytes = fs::read(path)
            .map_err(|e| Failure::io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.insert(
            role.to_owned(),
            InputDigest {
                path: path.display().to_string(),
                sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                bytes: bytes.len() as u64,
            },
        );
        Ok(())
    }
}
