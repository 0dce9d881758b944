use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use storm_core::reference::ReferenceCheck;
use storm_core::Error;

pub const MANIFEST_TIMESTAMP_FIELD: &str = "generated_at";

#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CmdResult<T>;
}

impl<T, E: Into<Error>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> CmdResult<T> {
        self.map_err(|e| Failure { stage, error: e.into() })
    }
}

/// 2 for unreadable input or bad configuration, 3 for model and numeric failures.
pub fn exit_code(error: &Error) -> u8 {
    let config = matches!(
        error,
        Error::InvalidArgument(_) | Error::UnknownTerm(_) | Error::DuplicateVariable(_)
    );
    if error.is_input_error() || config {
        2
    } else {
        3
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Output directory plus the manifest being assembled for one command.
pub struct Run {
    command: &'static str,
    dir: PathBuf,
    config: Value,
    inputs: Vec<Value>,
    counts: Map<String, Value>,
    drops: Map<String, Value>,
    outputs: Vec<String>,
    checks: Vec<ReferenceCheck>,
}

impl Run {
    pub fn start(command: &'static str, dir: &Path, config: Value) -> CmdResult<Self> {
        fs::create_dir_all(dir).stage("output")?;
        Ok(Self {
            command,
            dir: dir.to_path_buf(),
            config,
            inputs: Vec::new(),
            counts: Map::new(),
            drops: Map::new(),
            outputs: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path, sha256: String) {
        self.inputs.push(json!({ "role": role, "path": path.display().to_string(), "sha256": sha256 }));
    }

    pub fn count(&mut self, key: &str, n: impl Into<Value>) {
        self.counts.insert(key.to_string(), n.into());
    }

    pub fn drop_count(&mut self, key: &str, n: usize) {
        self.drops.insert(key.to_string(), n.into());
    }

    pub fn check(&mut self, check: ReferenceCheck) {
        self.checks.push(check);
    }

    /// Writes `name` (a bare file name) inside the output directory.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CmdResult {
        debug_assert!(!name.contains(['/', '\\']));
        fs::write(self.dir.join(name), bytes).stage("output")?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CmdResult {
        let mut text = serde_json::to_string_pretty(value).stage("output")?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self) -> CmdResult {
        self.outputs.sort();
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "inputs": self.inputs,
            "counts": self.counts,
            "drops": self.drops,
            "outputs": self.outputs,
            "reference_checks": self.checks,
            MANIFEST_TIMESTAMP_FIELD: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        });
        let name = format!("manifest-{}.json", self.command);
        let mut text = serde_json::to_string_pretty(&manifest).stage("output")?;
        text.push('\n');
        fs::write(self.dir.join(name), text).stage("output")
    }
}
