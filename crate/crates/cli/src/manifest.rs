use std::path::Path;

use serde::Serialize;

/// Written next to every output set.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seeds: Vec<u64>,
    pub models: Vec<String>,
    pub output_dir: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seeds: Vec<u64>, models: Vec<String>, out: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            seeds,
            models,
            output_dir: out.display().to_string(),
            version: format!("v{}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn write(&self, out: &Path) -> aavr_core::Result<()> {
        aavr_core::io::write_json(&out.join("manifest.json"), self)
    }
}
