//! Dataset manifest, WAV decoding and analysis-segment extraction.
//!
//! A manifest is a UTF-8 CSV file with the header
//! `id,path,performer,producer,role,group`. Lines starting with `#` are
//! comments. Audio paths are resolved relative to the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the analysis window cut from the middle of each song, in seconds.
pub const ANALYSIS_SECONDS: f64 = 46.0;

/// Accepted sample-rate range in Hz. Audio is never resampled.
pub const MIN_SAMPLE_RATE: u32 = 22_050;
pub const MAX_SAMPLE_RATE: u32 = 96_000;

pub const MANIFEST_HEADER: [&str; 6] = ["id", "path", "performer", "producer", "role", "group"];

/// How a song takes part in the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Produced by one of the studied producers; used to train the maps.
    ProducerTrain,
    /// A studied rapper performing on a studied producer's beat; projected only.
    RapperCollab,
    /// Produced and performed by a studied rapper; projected only.
    RapperSelfproduced,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::ProducerTrain => "producer-train",
            Role::RapperCollab => "rapper-collab",
            Role::RapperSelfproduced => "rapper-selfproduced",
        }
    }

    pub fn is_training(self) -> bool {
        self == Role::ProducerTrain
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "producer-train" => Ok(Role::ProducerTrain),
            "rapper-collab" => Ok(Role::RapperCollab),
            "rapper-selfproduced" => Ok(Role::RapperSelfproduced),
            other => Err(other.to_string()),
        }
    }
}

/// One corpus entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongRecord {
    pub id: String,
    /// Audio file path, already resolved against the manifest directory.
    pub path: PathBuf,
    pub performer: String,
    pub producer: String,
    pub role: Role,
    /// Color/legend key; also names the producer region a song is tested against.
    pub group: String,
}

/// Loads a manifest file. Record `i` corresponds to data row `i`.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SongRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(file, base)
}

/// Parses manifest CSV text, resolving relative audio paths against `base_dir`.
pub fn parse_manifest<R: Read>(reader: R, base_dir: &Path) -> Result<Vec<SongRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(manifest_error)?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != MANIFEST_HEADER {
        return Err(Error::ManifestParse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                MANIFEST_HEADER.join(","),
                found.join(",")
            ),
        });
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(manifest_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or_default().to_string();

        let id = field(0);
        if id.is_empty() {
            return Err(Error::ManifestParse {
                line,
                message: "empty id".into(),
            });
        }
        let raw_path = field(1);
        if raw_path.is_empty() {
            return Err(Error::ManifestParse {
                line,
                message: format!("empty path for `{id}`"),
            });
        }
        let role = field(4)
            .parse::<Role>()
            .map_err(|value| Error::UnknownRole { line, value })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }

        let audio = PathBuf::from(&raw_path);
        let path = if audio.is_absolute() {
            audio
        } else {
            base_dir.join(audio)
        };
        records.push(SongRecord {
            id,
            path,
            performer: field(2),
            producer: field(3),
            role,
            group: field(5),
        });
    }
    Ok(records)
}

fn manifest_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::ManifestParse {
        line,
        message: e.to_string(),
    }
}

/// A decoded stereo signal with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoSignal {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sample_rate: u32,
}

impl StereoSignal {
    pub fn new(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if left.iter().chain(&right).any(|s| !(-1.0..=1.0).contains(s)) {
            return Err(Error::InvalidArgument("samples must lie in [-1, 1]".into()));
        }
        Ok(Self {
            left,
            right,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }
}

/// The analysis window cut from a song.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoSegment {
    pub signal: StereoSignal,
    /// Start of the segment within the source, in seconds.
    pub source_offset: f64,
    /// Set when the source was shorter than the requested window.
    pub truncated: bool,
}

impl StereoSegment {
    /// Treats a whole signal as a segment (offset 0, not truncated).
    pub fn whole(signal: StereoSignal) -> Self {
        Self {
            signal,
            source_offset: 0.0,
            truncated: false,
        }
    }

    pub fn left(&self) -> &[f64] {
        &self.signal.left
    }

    pub fn right(&self) -> &[f64] {
        &self.signal.right
    }

    pub fn sample_rate(&self) -> u32 {
        self.signal.sample_rate
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }
}

/// Cuts `duration` seconds from the middle of `signal`.
///
/// The start sample is `floor((total - duration) / 2 * sample_rate)`. Inputs
/// shorter than the window are returned whole with `truncated` set.
pub fn extract_middle_segment(signal: &StereoSignal, duration: f64) -> Result<StereoSegment> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("signal has no samples"));
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "segment duration must be positive, got {duration}"
        )));
    }
    let total = signal.len();
    let wanted = (duration * f64::from(signal.sample_rate)).round() as usize;
    if total < wanted {
        return Ok(StereoSegment {
            signal: signal.clone(),
            source_offset: 0.0,
            truncated: true,
        });
    }
    let start = (total - wanted) / 2;
    let end = start + wanted;
    Ok(StereoSegment {
        signal: StereoSignal {
            left: signal.left[start..end].to_vec(),
            right: signal.right[start..end].to_vec(),
            sample_rate: signal.sample_rate,
        },
        source_offset: start as f64 / f64::from(signal.sample_rate),
        truncated: false,
    })
}

/// Decodes a two-channel PCM WAV file (16/24/32-bit integer or 32-bit float).
///
/// Integer samples are divided by `2^(bits-1)`, so negative full scale maps
/// to exactly `-1.0`. Float samples are clamped to `[-1, 1]`.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<StereoSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 2 {
        return Err(Error::UnsupportedChannels {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&spec.sample_rate) {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!(
                "sample rate {} Hz outside {MIN_SAMPLE_RATE}..={MAX_SAMPLE_RATE} Hz",
                spec.sample_rate
            ),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| sample_error(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| sample_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };

    if interleaved.len() % 2 != 0 {
        return Err(Error::CorruptWav {
            path: path.to_path_buf(),
            detail: "odd number of samples in a stereo stream".into(),
        });
    }
    let (left, right) = interleaved.chunks_exact(2).map(|f| (f[0], f[1])).unzip();
    Ok(StereoSignal {
        left,
        right,
        sample_rate: spec.sample_rate,
    })
}

// The header parsed, so a short read here means the data chunk is truncated.
fn sample_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::CorruptWav {
            path: path.to_path_buf(),
            detail: format!("truncated sample data: {io}"),
        },
        other => wav_error(path, other),
    }
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    let path = path.to_path_buf();
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptWav {
                path,
                detail: io.to_string(),
            }
        }
        hound::Error::IoError(io) => Error::Io { path, source: io },
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path,
            detail: "unsupported WAV format".into(),
        },
        other => Error::CorruptWav {
            path,
            detail: other.to_string(),
        },
    }
}

/// Writes a stereo signal as integer PCM (16, 24 or 32 bits).
///
/// Samples are scaled by `2^(bits-1)`, rounded and saturated, which inverts
/// the scaling in [`decode_wav`] for every representable integer value.
pub fn encode_wav(path: impl AsRef<Path>, signal: &StereoSignal, bits: u16) -> Result<()> {
    let path = path.as_ref();
    if !matches!(bits, 16 | 24 | 32) {
        return Err(Error::InvalidArgument(format!(
            "unsupported bit depth {bits}"
        )));
    }
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: signal.sample_rate,
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let scale = (1u64 << (bits - 1)) as f64;
    let (lo, hi) = (-scale, scale - 1.0);
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for (&l, &r) in signal.left.iter().zip(&signal.right) {
        for s in [l, r] {
            let v = (s * scale).round().clamp(lo, hi) as i32;
            writer.write_sample(v).map_err(|e| wav_error(path, e))?;
        }
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}
