//! Run manifests and the files that carry them.
//!
//! JSON artifacts get a top-level `manifest` key. CSV artifacts start with
//! `#` comment lines holding the manifest as compact JSON, which
//! `csv::ReaderBuilder::comment(Some(b'#'))` skips.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    /// Optimizer seed, for commands that search.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Files read by the run, as given on the command line.
    pub inputs: Vec<PathBuf>,
    /// Every argument of the subcommand, defaults included.
    pub arguments: Value,
}

impl RunManifest {
    pub fn new(command: &'static str, output_dir: &Path, arguments: &impl Serialize) -> Self {
        Self {
            command,
            version: VERSION,
            seed: None,
            output_dir: output_dir.to_path_buf(),
            inputs: Vec::new(),
            arguments: serde_json::to_value(arguments).expect("arguments serialize"),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn read(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn compact(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

pub struct Outputs {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".refocus-write-test");
        fs::write(&probe, b"").map_err(|e| CliError::io(dir, format!("output directory not writable ({e})")))?;
        let _ = fs::remove_file(&probe);
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: String) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `value` with the manifest merged in as a top-level key.
    pub fn json(&mut self, name: &str, manifest: &RunManifest, value: &impl Serialize) -> CliResult<PathBuf> {
        let mut v = serde_json::to_value(value).expect("artifact serializes");
        let m = serde_json::to_value(manifest).expect("manifest serializes");
        match &mut v {
            Value::Object(map) => {
                map.insert("manifest".into(), m);
            }
            other => {
                v = serde_json::json!({ "manifest": m, "value": other.take() });
            }
        }
        let mut text = serde_json::to_string_pretty(&v).expect("artifact serializes");
        text.push('\n');
        self.write(name, text)
    }

    /// Writes a CSV with the manifest and `notes` as leading comment lines.
    pub fn csv<R: Serialize>(&mut self, name: &str, manifest: &RunManifest, notes: &[String], rows: &[R]) -> CliResult<PathBuf> {
        let mut text = format!("# refocus manifest: {}\n", manifest.compact());
        for n in notes {
            text.push_str(&format!("# {n}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
        }
        let body = w.into_inner().map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
        text.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
        self.write(name, text)
    }
}
