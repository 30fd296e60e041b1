//! Mel-frequency cepstral coefficients of the mono downmix.
//!
//! Per frame: magnitude spectrum of a Hann-windowed 2048-sample frame,
//! triangular mel filterbank, natural log with an additive floor, orthonormal
//! DCT-II, first six coefficients. The song feature is the mean over frames.

use serde::{Deserialize, Serialize};

use crate::corpus::StereoSegment;
use crate::dsp::{frame_spectra, hann_window, DctPlan, DEFAULT_HOP, FRAME_LEN};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector, FEATURE_DIM};

pub const DEFAULT_FILTERS: usize = 40;
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_filters: usize,
    /// Number of coefficients kept per frame.
    pub n_coeffs: usize,
    /// Index of the first kept coefficient; 1 drops c0.
    pub coeff_offset: usize,
    pub frame_len: usize,
    pub hop: usize,
    /// Added to each mel energy before the log.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_filters: DEFAULT_FILTERS,
            n_coeffs: FEATURE_DIM,
            coeff_offset: 0,
            frame_len: FRAME_LEN,
            hop: DEFAULT_HOP,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }
}

/// `2595 * log10(1 + f / 700)`
pub fn hz_to_mel(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be non-negative, got {f}"
        )));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if !(mel >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mel value must be non-negative, got {mel}"
        )));
    }
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

/// Triangular filters with peak 1, equally spaced on the mel scale between
/// 0 Hz and Nyquist, sampled at the DFT bin frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `n_filters` rows of `n_bins` weights.
    pub weights: Vec<Vec<f64>>,
    /// Center frequency of each filter in Hz.
    pub centers: Vec<f64>,
    pub range: (f64, f64),
    pub sample_rate: f64,
}

impl MelFilterbank {
    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Filter energies for one magnitude spectrum.
    pub fn apply(&self, magnitudes: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(magnitudes).map(|(w, m)| w * m).sum())
            .collect()
    }
}

/// Builds the standard bank for 2048-sample frames (1024 bins).
pub fn build_filterbank(n_filters: usize, sample_rate: f64) -> Result<MelFilterbank> {
    build_filterbank_for_frame(n_filters, sample_rate, FRAME_LEN)
}

pub fn build_filterbank_for_frame(
    n_filters: usize,
    sample_rate: f64,
    frame_len: usize,
) -> Result<MelFilterbank> {
    if n_filters < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 mel filters, got {n_filters}"
        )));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidArgument(
            "sample rate must be positive".into(),
        ));
    }
    let n_bins = frame_len / 2;
    let f_max = sample_rate / 2.0;
    let mel_max = hz_to_mel(f_max)?;
    let points = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_filters + 1) as f64))
        .collect::<Result<Vec<f64>>>()?;
    let bin_hz = sample_rate / frame_len as f64;

    let mut weights = Vec::with_capacity(n_filters);
    for (i, edge) in points.windows(3).enumerate() {
        let (lo, center, hi) = (edge[0], edge[1], edge[2]);
        let row: Vec<f64> = (0..n_bins)
            .map(|k| {
                let f = k as f64 * bin_hz;
                if f < lo || f > hi {
                    0.0
                } else if f <= center {
                    (f - lo) / (center - lo)
                } else {
                    (hi - f) / (hi - center)
                }
            })
            .collect();
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mel filter {i} ({lo:.1}..{hi:.1} Hz) covers no frequency bin; \
                 {n_filters} filters are too many for {bin_hz:.2} Hz bins"
            )));
        }
        weights.push(row);
    }

    Ok(MelFilterbank {
        weights,
        centers: points[1..=n_filters].to_vec(),
        range: (0.0, f_max),
        sample_rate,
    })
}

/// `(L + R) / 2`
pub fn downmix_mono(segment: &StereoSegment) -> Vec<f64> {
    segment
        .left()
        .iter()
        .zip(segment.right())
        .map(|(l, r)| (l + r) / 2.0)
        .collect()
}

/// Per-frame cepstral coefficients of a mono signal.
pub fn mfcc_frames(
    mono: &[f64],
    bank: &MelFilterbank,
    config: &MfccConfig,
) -> Result<Vec<Vec<f64>>> {
    if bank.n_bins() != config.frame_len / 2 {
        return Err(Error::InvalidArgument(format!(
            "filterbank has {} bins but frames yield {}",
            bank.n_bins(),
            config.frame_len / 2
        )));
    }
    let window = hann_window(config.frame_len);
    let spectra = frame_spectra(
        mono,
        config.frame_len,
        config.hop,
        &window,
        bank.sample_rate,
    )?;
    let plan = DctPlan::new(bank.n_filters(), config.coeff_offset + config.n_coeffs)?;
    spectra
        .iter()
        .map(|frame| {
            let log_energies: Vec<f64> = bank
                .apply(&frame.magnitudes)
                .into_iter()
                .map(|e| (e + config.log_floor).ln())
                .collect();
            let mut c = plan.transform(&log_energies)?;
            c.drain(..config.coeff_offset);
            Ok(c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
}

/// Song-level MFCC feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccFeature {
    pub coefficients: Vec<f64>,
    pub n_frames: usize,
    pub aggregation: Aggregation,
}

impl MfccFeature {
    pub fn into_feature_vector(self, song_id: impl Into<String>) -> FeatureVector {
        FeatureVector::new(song_id, FeatureKind::Mfcc, self.coefficients)
    }
}

/// Mean of the per-frame coefficients of the downmixed segment.
pub fn mfcc_feature(
    segment: &StereoSegment,
    bank: &MelFilterbank,
    config: &MfccConfig,
) -> Result<MfccFeature> {
    if (bank.sample_rate - f64::from(segment.sample_rate())).abs() > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "filterbank built for {} Hz, segment is {} Hz",
            bank.sample_rate,
            segment.sample_rate()
        )));
    }
    let frames = mfcc_frames(&downmix_mono(segment), bank, config)?;
    let n = frames.len() as f64;
    let mut mean = vec![0.0; config.n_coeffs];
    for frame in &frames {
        for (m, c) in mean.iter_mut().zip(frame) {
            *m += c;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(MfccFeature {
        coefficients: mean,
        n_frames: frames.len(),
        aggregation: Aggregation::Mean,
    })
}
