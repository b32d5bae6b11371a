use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use influx_core::hashing::sha256_hex;
use log::info;
use serde::Serialize;

use crate::GlobalOpts;

/// Resolved configuration plus content hashes of every input and output.
///
/// Thread count, cache location and output directory are left out: they
/// cannot change the results.
#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: u64,
    format: crate::Format,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    #[serde(skip)]
    out_dir: PathBuf,
}

impl Manifest {
    pub fn new(command: &str, global: &GlobalOpts, config: &impl Serialize) -> Result<Self> {
        Ok(Manifest {
            tool: "influx",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: global.seed,
            format: global.format,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            out_dir: global.out_dir.clone(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes `bytes` to `path` and records its hash. Paths inside the
    /// output directory are recorded relative to it.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let key = path
            .strip_prefix(&self.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.outputs.insert(key, sha256_hex(bytes));
        Ok(())
    }

    /// Writes `<out-dir>/<command>.manifest.json` and returns its hash.
    pub fn finish(self) -> Result<String> {
        let path = self.out_dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&self)? + "\n";
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        let hash = sha256_hex(text.as_bytes());
        info!("wrote {} (sha256 {hash})", path.display());
        Ok(hash)
    }
}
