//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use polarity_core::io::write_atomic;
use polarity_core::PipelineConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full command line, program name excluded.
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub lexicons: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: None,
            seed: None,
            folds: None,
            grid: None,
            inputs: BTreeMap::new(),
            lexicons: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: Option<&Path>) -> &mut Self {
        if let Some(p) = path {
            self.inputs.insert(name.to_string(), p.to_path_buf());
        }
        self
    }

    pub fn lexicon(&mut self, name: &str, path: Option<&Path>) -> &mut Self {
        if let Some(p) = path {
            self.lexicons.insert(name.to_string(), p.to_path_buf());
        }
        self
    }

    /// Writes the manifest as `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = manifest_path(output);
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(&path, |w| {
            w.write_all(json.as_bytes())?;
            w.write_all(b"\n")
        })
        .with_context(|| format!("cannot write manifest {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
