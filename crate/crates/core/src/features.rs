//! Feature vectors shared by the extraction, training and reporting stages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of dimensions in both feature kinds with default settings.
pub const FEATURE_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Gonio,
    Mfcc,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 2] = [FeatureKind::Gonio, FeatureKind::Mfcc];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Gonio => "gonio",
            FeatureKind::Mfcc => "mfcc",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gonio" => Ok(FeatureKind::Gonio),
            "mfcc" => Ok(FeatureKind::Mfcc),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature kind `{other}` (expected gonio or mfcc)"
            ))),
        }
    }
}

/// One song's feature, tagged with its kind and song id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub song_id: String,
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(song_id: impl Into<String>, kind: FeatureKind, values: Vec<f64>) -> Self {
        Self {
            song_id: song_id.into(),
            kind,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}
