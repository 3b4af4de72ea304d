//! Model files: one header line carrying the format version and a SHA-256
//! checksum, followed by the model as pretty-printed JSON.
//!
//! ```text
//! clinpred-model v1 sha256=<hex over "v1\n" + body>
//! { ...body... }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{FittedModel, FORMAT_VERSION};

const MAGIC: &str = "clinpred-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: FittedModel,
    /// Training-data metrics recorded at save time, `(name, value)`.
    pub training_metrics: Vec<(String, f64)>,
}

fn checksum(version: u32, body: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("v{version}\n"));
    h.update(body.as_bytes());
    hex::encode(h.finalize())
}

pub fn encode_model(file: &ModelFile) -> Result<String> {
    encode_versioned(file, FORMAT_VERSION)
}

fn encode_versioned(file: &ModelFile, version: u32) -> Result<String> {
    let body = serde_json::to_string_pretty(file).map_err(|e| Error::MalformedModel(e.to_string()))?;
    Ok(format!("{MAGIC} v{version} sha256={}\n{body}\n", checksum(version, &body)))
}

pub fn decode_model(text: &str) -> Result<ModelFile> {
    let (header, body) =
        text.split_once('\n').ok_or_else(|| Error::MalformedModel("missing header line".into()))?;
    let body = body.strip_suffix('\n').unwrap_or(body);
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::MalformedModel("not a clinpred model file".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedModel("unreadable format version".into()))?;
    let stored = parts
        .next()
        .and_then(|c| c.strip_prefix("sha256="))
        .ok_or_else(|| Error::MalformedModel("missing checksum".into()))?
        .to_string();
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, supported: FORMAT_VERSION });
    }
    let computed = checksum(version, body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    let file: ModelFile = serde_json::from_str(body).map_err(|e| Error::MalformedModel(e.to_string()))?;
    if file.model.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: file.model.format_version, supported: FORMAT_VERSION });
    }
    Ok(file)
}

pub fn model_save(file: &ModelFile, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(file)?).map_err(|e| Error::io(path, e))
}

pub fn model_load(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::MalformedModel("model file is not UTF-8".into()))?;
    decode_model(&text)
}
