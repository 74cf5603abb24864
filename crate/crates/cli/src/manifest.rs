use roughwave::io::FieldMeta;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Artifact {
    pub role: &'static str,
    /// As given in the config, relative to the output directory unless
    /// absolute.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of a run. Field-producing commands flatten the field sidecar
/// into it, so the manifest doubles as the sidecar of the CSV.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    #[serde(flatten)]
    pub field: Option<FieldMeta>,
    pub artifacts: Vec<Artifact>,
}

/// Output locations of a run.
#[derive(Debug, Clone)]
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn join(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.0.join(p)
        }
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn artifact(role: &'static str, rel: &str, bytes: &[u8]) -> Artifact {
    Artifact { role, path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 }
}

/// `x.csv` becomes `x<suffix>`.
pub fn sibling(rel: &str, suffix: &str) -> String {
    let stem = rel.strip_suffix(".csv").or_else(|| rel.strip_suffix(".json")).unwrap_or(rel);
    format!("{stem}{suffix}")
}

impl Manifest {
    pub fn write(&self, out: &OutDir, rel: &str) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        out.write(rel, text.as_bytes()).map(|_| ())
    }
}
