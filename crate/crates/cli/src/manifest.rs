use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use echo_core::Params;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub params: Params,
    pub master_seed: u64,
    pub commit: Option<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    /// Command-specific extras.
    pub extra: Value,
}

/// HEAD of the repository this binary was built from, if git can tell.
pub fn commit_id() -> Option<String> {
    let out = Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

/// Collects output files for one command invocation.
pub struct OutDir {
    pub dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutDir {
            dir: dir.to_owned(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(name);
        Ok(())
    }

    /// Buffers whatever `f` writes, then stores it as `name`.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::io(self.path(name), e))?;
        self.write(name, buf)
    }

    /// Notes a file written by someone else.
    pub fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn finish(mut self, command: &str, params: &Params, master_seed: u64, extra: Value) -> Result<()> {
        self.record("manifest.json");
        let manifest = Manifest {
            command: command.to_string(),
            params: params.clone(),
            master_seed,
            commit: commit_id(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
            extra,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.path("manifest.json");
        std::fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))
    }
}
