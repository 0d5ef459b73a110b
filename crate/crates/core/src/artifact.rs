//! Versioned JSON envelopes for artifacts cached between runs.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: expected {expected} v{expected_version}, found {found} v{found_version}")]
    Format {
        path: String,
        expected: &'static str,
        expected_version: u32,
        found: String,
        found_version: u32,
    },
    #[error("{path}: built for a different {what}")]
    Mismatch { path: String, what: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope<B> {
    format: String,
    version: u32,
    body: B,
}

pub(crate) fn write<B: Serialize>(path: &Path, format: &'static str, version: u32, body: &B) -> Result<(), ArtifactError> {
    let p = path.display().to_string();
    let f = fs::File::create(path).map_err(|source| ArtifactError::Io { path: p.clone(), source })?;
    let env = Envelope { format: format.to_string(), version, body };
    serde_json::to_writer(BufWriter::new(f), &env).map_err(|source| ArtifactError::Json { path: p, source })
}

pub(crate) fn read<B: DeserializeOwned>(path: &Path, format: &'static str, version: u32) -> Result<B, ArtifactError> {
    let p = path.display().to_string();
    let f = fs::File::open(path).map_err(|source| ArtifactError::Io { path: p.clone(), source })?;
    let env: Envelope<B> =
        serde_json::from_reader(BufReader::new(f)).map_err(|source| ArtifactError::Json { path: p.clone(), source })?;
    if env.format != format || env.version != version {
        return Err(ArtifactError::Format {
            path: p,
            expected: format,
            expected_version: version,
            found: env.format,
            found_version: env.version,
        });
    }
    Ok(env.body)
}

pub(crate) fn mismatch(path: &Path, what: &str) -> ArtifactError {
    ArtifactError::Mismatch { path: path.display().to_string(), what: what.to_string() }
}
