use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// JSON envelope shared by every command.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    /// SHA-256 over every input file and the numeric parameters.
    pub inputs_digest: String,
    pub result: T,
    pub warnings: Vec<String>,
}

/// Accumulates the inputs of a run into one digest.
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn new(command: &str) -> Self {
        let mut h = Sha256::new();
        h.update(b"command\0");
        h.update(command.as_bytes());
        h.update(b"\0");
        InputDigest(h)
    }

    pub fn param(&mut self, name: &str, value: impl std::fmt::Display) -> &mut Self {
        self.0.update(format!("param\0{name}\0{value}\0").as_bytes());
        self
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> &mut Self {
        self.0.update(format!("file\0{name}\0{}\0", data.len()).as_bytes());
        self.0.update(data);
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// What a command hands back to the dispatcher: the JSON envelope and the
/// human-readable rendering.
pub struct Rendered {
    pub json: String,
    pub text: String,
}

impl Rendered {
    pub fn new<T: Serialize>(report: &Report<T>, mut text: String) -> Result<Self> {
        let json = serde_json::to_string_pretty(report).map_err(|e| Error::domain(format!("serializing report: {e}")))?;
        for w in &report.warnings {
            let _ = writeln!(text, "warning: {w}");
        }
        Ok(Rendered { json, text })
    }
}

/// `0.01745 -> "1.745%"` style rendering next to the raw value.
pub fn pct(p: f64) -> String {
    if p == 0.0 {
        return "0 (0%)".into();
    }
    let pc = p * 100.0;
    if pc >= 0.01 {
        format!("{p:.6e} ({pc:.4}%)")
    } else {
        format!("{p:.6e} ({pc:.3e}%)")
    }
}
