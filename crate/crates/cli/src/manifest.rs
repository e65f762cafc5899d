use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub start: String,
    pub end: Option<String>,
}

/// Record of one invocation. Everything but `timestamps` is a function of
/// the arguments and the input files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub argv: Vec<String>,
    pub params: Value,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timestamps: Timestamps,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: Vec<String>, params: Value, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv,
            params,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamps: Timestamps { start: now(), end: None },
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> walktest::Result<String> {
        let text = fs::read_to_string(path)?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: digest(text.as_bytes()),
        });
        Ok(text)
    }

    /// Writes `text` to `path`, or standard output for `None`.
    pub fn write_output(&mut self, path: Option<&Path>, text: &str) -> walktest::Result<()> {
        match path {
            Some(p) => fs::write(p, text)?,
            None => println!("{text}"),
        }
        self.outputs.push(FileDigest {
            path: path.map_or("-".into(), |p| p.display().to_string()),
            sha256: digest(text.as_bytes()),
        });
        Ok(())
    }

    /// Stamps the end time and writes the manifest next to the primary
    /// output (`<out>.manifest.json`), or as one JSON line on standard
    /// error when the output went to standard output.
    pub fn finish(mut self, primary: Option<&Path>) -> walktest::Result<()> {
        self.timestamps.end = Some(now());
        match primary.map(manifest_path) {
            Some(p) => fs::write(p, serde_json::to_string_pretty(&self)? + "\n")?,
            None => eprintln!("{}", serde_json::json!({ "manifest": self })),
        }
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        return out.join("manifest.json");
    }
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
