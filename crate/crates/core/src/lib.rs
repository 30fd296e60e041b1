//! Stereo-field and timbre features for studying producer sound profiles.
//!
//! The pipeline reads stereo songs, extracts a six-dimensional goniometer
//! feature (per-band phase-scope box counts and channel correlations) and a
//! six-dimensional MFCC feature, trains a self-organizing map per feature,
//! projects songs onto their best matching units and tests whether songs fall
//! into a producer's map region more often than the region's area predicts.
//!
//! Modules follow the pipeline order:
//!
//! * [`corpus`]: manifest loading, WAV decoding, analysis-segment cutting
//! * [`dsp`]: Butterworth band-pass sections, framed spectra, DCT-II
//! * [`gonio`]: mid/side rotation, box counting, channel correlation
//! * [`mfcc`]: mel filterbank and cepstral coefficients
//! * [`som`]: standardization, Kohonen training, BMU lookup, U-matrix
//! * [`analysis`]: map regions and the chi-squared goodness-of-fit test
//! * [`report`]: feature tables, statistics reports, SVG map renderings

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod analysis;
pub mod corpus;
pub mod dsp;
mod error;
pub mod features;
pub mod gonio;
pub mod mfcc;
pub mod report;
pub mod som;

pub use analysis::{chi2_gof, chi2_sf, GofResult, Region};
pub use corpus::{Role, SongRecord, StereoSegment, StereoSignal};
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureVector};
pub use gonio::{GonioConfig, GonioFeature};
pub use mfcc::{MelFilterbank, MfccConfig, MfccFeature};
pub use som::{CellCoord, SomConfig, SomModel, Standardizer};
