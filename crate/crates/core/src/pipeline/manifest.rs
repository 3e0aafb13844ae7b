use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub params: BTreeMap<String, String>,
    /// Input path -> SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the output directory) -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Missing file gives an empty manifest; a corrupt one is an error.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| Error::format(None, format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(Error::io_path(path, e)),
        }
    }

    /// Written through a `.partial` file and renamed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let partial = dir.join(format!("{MANIFEST_FILE}.partial"));
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        text.push('\n');
        fs::write(&partial, text).map_err(|e| Error::io_path(&partial, e))?;
        fs::rename(&partial, &path).map_err(|e| Error::io_path(&path, e))
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io_path(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
