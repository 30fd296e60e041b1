//! Numerical primitives: Butterworth band-pass filters as cascaded
//! second-order sections, framed magnitude spectra and the orthonormal DCT-II.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame length of the MFCC spectra.
pub const FRAME_LEN: usize = 2048;
/// Default hop between frames (50% overlap).
pub const DEFAULT_HOP: usize = 1024;
/// Default Butterworth order of the band filters.
pub const DEFAULT_ORDER: usize = 5;

/// One second-order section, normalized so that `a0 = 1`.
///
/// Transfer function: `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex response at normalized angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = self.b0 + z1 * self.b1 + z2 * self.b2;
        let den = 1.0 + z1 * self.a1 + z2 * self.a2;
        num / den
    }

    /// Stability triangle: both poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// A designed Butterworth band-pass filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPassSpec {
    pub low_edge: f64,
    pub high_edge: f64,
    pub order: usize,
    pub sample_rate: f64,
    pub sections: Vec<Biquad>,
}

impl BandPassSpec {
    /// Magnitude of the cascade at `freq` Hz.
    pub fn magnitude(&self, freq: f64) -> f64 {
        let omega = 2.0 * PI * freq / self.sample_rate;
        self.sections
            .iter()
            .map(|s| s.response(omega))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
            .norm()
    }

    pub fn magnitude_db(&self, freq: f64) -> f64 {
        20.0 * self.magnitude(freq).log10()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }
}

/// Designs an order-`order` Butterworth band-pass for the band `[low, high]` Hz.
///
/// The analog low-pass prototype is shifted to a band-pass around the
/// prewarped edges and mapped to the z-plane with the bilinear transform, so
/// the magnitude is exactly `1/sqrt(2)` at both edges. Each prototype pole
/// yields one pole pair, i.e. one section; every section carries one zero at
/// DC and one at Nyquist and is scaled to unit gain at the band center.
pub fn design_bandpass(
    low: f64,
    high: f64,
    sample_rate: f64,
    order: usize,
) -> Result<BandPassSpec> {
    let nyquist = sample_rate / 2.0;
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidFilter(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if !(low > 0.0 && low < high) {
        return Err(Error::InvalidFilter(format!(
            "band edges must satisfy 0 < low < high, got ({low}, {high})"
        )));
    }
    if high >= nyquist {
        return Err(Error::InvalidFilter(format!(
            "high edge {high} Hz is not below Nyquist ({nyquist} Hz)"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidFilter("order must be at least 1".into()));
    }

    let k = 2.0 * sample_rate;
    let warp = |f: f64| k * (PI * f / sample_rate).tan();
    let (wl, wh) = (warp(low), warp(high));
    let bw = wh - wl;
    let w0_sq = wl * wh;

    // Analog band-pass pole pairs, one pair per section.
    let mut pairs: Vec<(Complex64, Complex64)> = Vec::with_capacity(order);
    for m in 0..order.div_ceil(2) {
        let theta = PI * (2 * m + 1 + order) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        let s1 = (pb + disc) / 2.0;
        let s2 = (pb - disc) / 2.0;
        if 2 * m + 1 == order {
            // real prototype pole: its two band-pass poles form one section
            pairs.push((s1, s2));
        } else {
            pairs.push((s1, s1.conj()));
            pairs.push((s2, s2.conj()));
        }
    }

    let bilinear = |s: Complex64| (k + s) / (k - s);
    let center = 2.0 * (w0_sq.sqrt() / k).atan();
    let sections = pairs
        .into_iter()
        .map(|(s1, s2)| {
            let (z1, z2) = (bilinear(s1), bilinear(s2));
            let mut section = Biquad {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1: -(z1 + z2).re,
                a2: (z1 * z2).re,
            };
            let g = 1.0 / section.response(center).norm();
            section.b0 *= g;
            section.b2 *= g;
            section
        })
        .collect();

    Ok(BandPassSpec {
        low_edge: low,
        high_edge: high,
        order,
        sample_rate,
        sections,
    })
}

/// Causal filtering from zero initial state. Output has the input's length.
pub fn apply_filter(spec: &BandPassSpec, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in &spec.sections {
        // transposed direct form II
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let input = *v;
            let out = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * out + z2;
            z2 = s.b2 * input - s.a2 * out;
            *v = out;
        }
    }
    y
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Magnitudes of the non-negative DFT bins of one windowed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFrame {
    /// Bins `0..frame_len/2`; 1024 for the standard 2048-sample frame.
    pub magnitudes: Vec<f64>,
    pub frame_index: usize,
    /// Bin spacing in Hz.
    pub bin_width: f64,
}

/// Splits `x` into frames at offsets `0, hop, 2*hop, ...`, windows and
/// transforms each, and returns bin magnitudes. A trailing partial frame is
/// dropped, so the count is `floor((len - frame_len) / hop) + 1`.
pub fn frame_spectra(
    x: &[f64],
    frame_len: usize,
    hop: usize,
    window: &[f64],
    sample_rate: f64,
) -> Result<Vec<SpectrumFrame>> {
    if frame_len < 2 || frame_len % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "frame length must be even and at least 2, got {frame_len}"
        )));
    }
    if hop == 0 {
        return Err(Error::InvalidArgument("hop must be positive".into()));
    }
    if window.len() != frame_len {
        return Err(Error::LengthMismatch {
            left: window.len(),
            right: frame_len,
        });
    }
    if x.len() < frame_len {
        return Err(Error::InputTooShort {
            needed: frame_len,
            got: x.len(),
        });
    }

    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let n_frames = (x.len() - frame_len) / hop + 1;
    let bin_width = sample_rate / frame_len as f64;

    let mut frames = Vec::with_capacity(n_frames);
    for idx in 0..n_frames {
        let chunk = &x[idx * hop..idx * hop + frame_len];
        for ((b, &s), &w) in buf.iter_mut().zip(chunk).zip(window) {
            *b = Complex64::new(s * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        frames.push(SpectrumFrame {
            magnitudes: buf[..frame_len / 2].iter().map(|c| c.norm()).collect(),
            frame_index: idx,
            bin_width,
        });
    }
    Ok(frames)
}

/// Precomputed orthonormal DCT-II basis truncated to the first `n_out` rows.
#[derive(Debug, Clone)]
pub struct DctPlan {
    n_in: usize,
    n_out: usize,
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(n_in: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 {
            return Err(Error::EmptyInput("DCT input"));
        }
        if n_out > n_in {
            return Err(Error::InvalidArgument(format!(
                "requested {n_out} DCT coefficients from a length-{n_in} vector"
            )));
        }
        let n = n_in as f64;
        let mut basis = Vec::with_capacity(n_in * n_out);
        for k in 0..n_out {
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            basis.extend(
                (0..n_in).map(|i| scale * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos()),
            );
        }
        Ok(Self { n_in, n_out, basis })
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_in {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: self.n_in,
            });
        }
        Ok(self
            .basis
            .chunks_exact(self.n_in)
            .take(self.n_out)
            .map(|row| row.iter().zip(v).map(|(b, x)| b * x).sum())
            .collect())
    }
}

/// First `n_out` coefficients of the orthonormal DCT-II of `v`.
pub fn dct_ii(v: &[f64], n_out: usize) -> Result<Vec<f64>> {
    DctPlan::new(v.len(), n_out)?.transform(v)
}
