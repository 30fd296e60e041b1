//! The goniometer feature: per-band phase-scope occupancy and channel
//! correlation.
//!
//! The phase scope plots left against right rotated by -45 degrees, i.e. in
//! mid/side coordinates. Occupancy is counted on a square grid spanning
//! `[-sqrt 2, sqrt 2]` on both axes, which is exactly the rotated image of the
//! `[-1, 1]^2` sample square.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::corpus::StereoSegment;
use crate::dsp::{apply_filter, design_bandpass, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector};

/// Low, mid and high analysis bands in Hz.
pub const DEFAULT_BANDS: [(f64, f64); 3] = [(20.0, 150.0), (150.0, 2000.0), (2000.0, 10000.0)];
/// Boxes per axis of the phase-scope grid.
pub const DEFAULT_GRID: usize = 20;
/// Half-width of the phase-scope grid in mid/side units.
pub const GRID_SPAN: f64 = SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GonioConfig {
    pub bands: Vec<(f64, f64)>,
    pub grid: usize,
    pub filter_order: usize,
}

impl Default for GonioConfig {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS.to_vec(),
            grid: DEFAULT_GRID,
            filter_order: DEFAULT_ORDER,
        }
    }
}

/// Phase-scope samples in mid/side coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedCloud {
    pub m: Vec<f64>,
    pub s: Vec<f64>,
}

/// Goniometer feature of one song: a box count and a correlation per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GonioFeature {
    pub boxes: Vec<u32>,
    pub correlations: Vec<f64>,
}

impl GonioFeature {
    /// `[boxes_low, boxes_mid, boxes_high, corr_low, corr_mid, corr_high]`
    pub fn to_vec(&self) -> Vec<f64> {
        self.boxes
            .iter()
            .map(|&b| f64::from(b))
            .chain(self.correlations.iter().copied())
            .collect()
    }

    pub fn into_feature_vector(self, song_id: impl Into<String>) -> FeatureVector {
        FeatureVector::new(song_id, FeatureKind::Gonio, self.to_vec())
    }
}

/// Rotates `(L, R)` to `m = (L+R)/sqrt 2`, `s = (R-L)/sqrt 2`.
///
/// Right-heavy material lands at positive `s`.
pub fn rotate_mid_side(left: &[f64], right: &[f64]) -> RotatedCloud {
    let (m, s) = left
        .iter()
        .zip(right)
        .map(|(&l, &r)| ((l + r) / SQRT_2, (r - l) / SQRT_2))
        .unzip();
    RotatedCloud { m, s }
}

#[inline]
fn cell_index(v: f64, grid: usize) -> usize {
    let t = (v + GRID_SPAN) / (2.0 * GRID_SPAN) * grid as f64;
    // half-open cells, last one closed; overshoot clamps to the border cell
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(grid - 1)
    }
}

/// Number of `grid x grid` cells containing at least one sample point.
pub fn box_count(cloud: &RotatedCloud, grid: usize) -> Result<u32> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be at least 1".into()));
    }
    let mut occupied = vec![false; grid * grid];
    let mut count = 0u32;
    for (&m, &s) in cloud.m.iter().zip(&cloud.s) {
        let cell = &mut occupied[cell_index(m, grid) * grid + cell_index(s, grid)];
        if !*cell {
            *cell = true;
            count += 1;
        }
    }
    Ok(count)
}

/// Pearson correlation between the two channels.
///
/// Degenerate cases follow hardware correlation meters: two constant channels
/// read 1.0 (silence is mono-compatible), exactly one constant channel reads 0.0.
pub fn channel_correlation(left: &[f64], right: &[f64]) -> Result<f64> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    if left.len() < 2 {
        return Err(Error::InputTooShort {
            needed: 2,
            got: left.len(),
        });
    }
    let n = left.len() as f64;
    let mean_l = left.iter().sum::<f64>() / n;
    let mean_r = right.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&l, &r) in left.iter().zip(right) {
        let (dl, dr) = (l - mean_l, r - mean_r);
        sxy += dl * dr;
        sxx += dl * dl;
        syy += dr * dr;
    }
    Ok(match (sxx == 0.0, syy == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
    })
}

/// Computes the goniometer feature: for each band, filter both channels
/// identically, then box-count the rotated cloud and correlate the channels.
pub fn gonio_feature(segment: &StereoSegment, config: &GonioConfig) -> Result<GonioFeature> {
    let rate = f64::from(segment.sample_rate());
    let mut boxes = Vec::with_capacity(config.bands.len());
    let mut correlations = Vec::with_capacity(config.bands.len());
    for &(low, high) in &config.bands {
        let spec = design_bandpass(low, high, rate, config.filter_order)?;
        let left = apply_filter(&spec, segment.left());
        let right = apply_filter(&spec, segment.right());
        boxes.push(box_count(&rotate_mid_side(&left, &right), config.grid)?);
        correlations.push(channel_correlation(&left, &right)?);
    }
    Ok(GonioFeature {
        boxes,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::StereoSignal;

    fn cloud(points: &[(f64, f64)]) -> RotatedCloud {
        let (l, r): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        rotate_mid_side(&l, &r)
    }

    #[test]
    fn rotation_examples() {
        let c = cloud(&[(1.0, 1.0), (-1.0, 1.0)]);
        assert!((c.m[0] - SQRT_2).abs() < 1e-15 && c.s[0] == 0.0);
        assert!(c.m[1] == 0.0 && (c.s[1] - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn silence_occupies_one_box() {
        let c = cloud(&[(0.0, 0.0); 100]);
        assert_eq!(box_count(&c, 20).unwrap(), 1);
    }

    #[test]
    fn mono_ramp_fills_one_column() {
        let n = 1_000_000;
        let l: Vec<f64> = (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect();
        let c = rotate_mid_side(&l, &l);
        assert_eq!(box_count(&c, 20).unwrap(), 20);
    }

    #[test]
    fn corners_and_overshoot_clamp() {
        // full-scale corners lie on the closed outer edge
        let c = cloud(&[(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]);
        assert_eq!(box_count(&c, 20).unwrap(), 4);
        let out = RotatedCloud {
            m: vec![5.0, -5.0],
            s: vec![0.0, 0.0],
        };
        assert_eq!(box_count(&out, 20).unwrap(), 2);
        assert!(box_count(&c, 0).is_err());
    }

    #[test]
    fn correlation_examples() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((channel_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((channel_correlation(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(channel_correlation(&[0.0; 4], &[0.0; 4]).unwrap(), 1.0);
        assert_eq!(channel_correlation(&[0.3; 4], &x[..4]).unwrap(), 0.0);
    }

    #[test]
    fn correlation_errors() {
        assert!(matches!(
            channel_correlation(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            channel_correlation(&[1.0], &[1.0]),
            Err(Error::InputTooShort { .. })
        ));
    }

    #[test]
    fn silent_segment_feature() {
        let sig = StereoSignal::new(vec![0.0; 44100], vec![0.0; 44100], 44100).unwrap();
        let f = gonio_feature(&StereoSegment::whole(sig), &GonioConfig::default()).unwrap();
        assert_eq!(f.to_vec(), vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }
}
