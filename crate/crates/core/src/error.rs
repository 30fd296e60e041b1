use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: u64, message: String },

    #[error("duplicate song id `{0}` in manifest")]
    DuplicateId(String),

    #[error("manifest line {line}: unknown role `{value}`")]
    UnknownRole { line: u64, value: String },

    #[error("{path}: unsupported channel count {channels} (expected 2)")]
    UnsupportedChannels { path: PathBuf, channels: u16 },

    #[error("{path}: unsupported encoding: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("{path}: corrupt or truncated WAV data: {detail}")]
    CorruptWav { path: PathBuf, detail: String },

    #[error("invalid filter design: {0}")]
    InvalidFilter(String),

    #[error("input too short: need at least {needed} samples, got {got}")]
    InputTooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid SOM configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid region `{name}`: {reason}")]
    InvalidRegion { name: String, reason: String },

    #[error("region file line {line}: {message}")]
    RegionParse { line: usize, message: String },

    #[error("feature kind mismatch: expected {expected}, found {found}")]
    FeatureKindMismatch { expected: String, found: String },

    #[error("feature table: {0}")]
    FeatureTable(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
