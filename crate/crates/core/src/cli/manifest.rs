//! JSON record written next to every command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Debug, Default, Serialize)]
pub(crate) struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub options: BTreeMap<String, Value>,
    pub seeds: BTreeMap<String, u64>,
    /// Input path to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn new(argv: &[String]) -> Self {
        RunManifest {
            argv: argv.to_vec(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn set_options<T: Serialize>(&mut self, command: &str, options: &T) {
        self.command = command.to_string();
        if let Ok(Value::Object(map)) = serde_json::to_value(options) {
            self.options = map.into_iter().collect();
        }
    }

    pub fn resolve<T: Serialize>(&mut self, key: &str, value: T) {
        if let Ok(v) = serde_json::to_value(value) {
            self.options.insert(key.to_string(), v);
        }
    }

    pub fn record_seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn record_output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::file(path, e))?;
        fs::write(path, text + "\n").map_err(|e| CliError::file(path, e))
    }
}
