//! Run manifests: the resolved configuration and input digests, written
//! before any training starts so a run can be reproduced or audited.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub created_utc: String,
    pub out_dir: String,
    pub seed: u64,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub min_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_values: Option<Vec<usize>>,
    /// Input role (train, test, parses-train, ...) to path and content hash.
    pub inputs: BTreeMap<String, InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String, Error> {
    let mut file = fs::File::open(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn digest_inputs(paths: &[(&str, &Path)]) -> Result<BTreeMap<String, InputDigest>, Error> {
        let mut inputs = BTreeMap::new();
        for (role, path) in paths {
            inputs.insert(
                role.to_string(),
                InputDigest { path: path.display().to_string(), sha256: sha256_file(path)? },
            );
        }
        Ok(inputs)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Usage(format!("manifest serialization: {e}")))?;
        fs::write(path, json).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
    }

    /// Re-hash the manifest's inputs and report any that changed.
    pub fn verify_inputs(&self) -> Result<Vec<String>, Error> {
        let mut changed = Vec::new();
        for (role, digest) in &self.inputs {
            let now = sha256_file(Path::new(&digest.path))?;
            if now != digest.sha256 {
                changed.push(role.clone());
            }
        }
        Ok(changed)
    }
}
