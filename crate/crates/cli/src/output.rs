use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use sigposs_service::sha256_hex;

use crate::error::CliError;

/// Provenance record written next to a command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub git_describe: String,
    pub config_sha256: String,
    pub seed: u64,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    /// File name relative to the manifest.
    pub file: String,
    pub sha256: String,
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Files written by one command. Unless [`OutputSet::commit`] is called,
/// everything written is deleted when the set is dropped.
pub struct OutputSet {
    command: String,
    written: Vec<(PathBuf, String)>,
    committed: bool,
}

impl OutputSet {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            written: Vec::new(),
            committed: false,
        }
    }

    pub fn write(&mut self, path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = bytes.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        }
        // register first so a half-written file is cleaned up too
        self.written.push((path.to_path_buf(), sha256_hex(bytes)));
        fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write(path, text)
    }

    /// Writes `manifest_<command>.json` into `dir` and keeps every output.
    pub fn commit(mut self, dir: &Path, config_sha256: String, seed: u64) -> Result<PathBuf, CliError> {
        let outputs = self
            .written
            .iter()
            .map(|(p, sha)| OutputEntry {
                file: p
                    .strip_prefix(dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .replace('\\', "/"),
                sha256: sha.clone(),
            })
            .collect();
        let manifest = Manifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            git_describe: git_describe(),
            config_sha256,
            seed,
            outputs,
        };
        let path = dir.join(format!("manifest_{}.json", self.command));
        self.write_json(&path, &manifest)?;
        self.committed = true;
        Ok(path)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for (p, _) in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}
