//! Deterministic online Kohonen maps on standardized features.
//!
//! Training draws every sample once per epoch in a seeded shuffled order,
//! finds its best matching unit (BMU) by Euclidean distance and pulls every
//! unit toward the sample with a Gaussian neighborhood on the rectangular
//! grid. Learning rate and neighborhood width decay linearly per epoch.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureKind;

/// Smallest standard deviation used when scaling a dimension.
pub const STD_FLOOR: f64 = 1e-12;
pub const DEFAULT_SEED: u64 = 42;

/// Per-dimension z-scoring fitted on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Fits means and population standard deviations. Constant dimensions get
    /// the floor value and therefore standardize to exactly zero.
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let dim = check_features(features)?;
        let n = features.len() as f64;
        let mut means = Vec::with_capacity(dim);
        let mut stds = Vec::with_capacity(dim);
        for d in 0..dim {
            // shifting by the first value keeps constant columns exact
            let first = features[0][d];
            let mean = first + features.iter().map(|f| f[d] - first).sum::<f64>() / n;
            let var = features.iter().map(|f| (f[d] - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(var.sqrt().max(STD_FLOOR));
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let first = features.first().ok_or(Error::EmptyInput("feature list"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::EmptyInput("feature vector"));
    }
    for f in features {
        if f.len() != dim {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: dim,
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}

/// Map geometry, schedules and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomConfig {
    pub rows: usize,
    pub cols: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub seed: u64,
}

impl Default for SomConfig {
    fn default() -> Self {
        Self::with_grid(24, 16)
    }
}

impl SomConfig {
    /// Default schedules for a `rows x cols` map; the initial neighborhood
    /// radius is half the longer side.
    pub fn with_grid(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            epochs: 200,
            lr_start: 0.5,
            lr_end: 0.01,
            sigma_start: (rows.max(cols) as f64 / 2.0).max(1.0),
            sigma_end: 1.0,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rows < 2 || self.cols < 2 {
            return fail("rows and cols must be at least 2");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end && self.lr_start <= 1.0) {
            return fail("learning rates must satisfy 1 >= lr_start >= lr_end > 0");
        }
        if !(self.sigma_end > 0.0
            && self.sigma_start >= self.sigma_end
            && self.sigma_start.is_finite())
        {
            return fail("neighborhood widths must satisfy sigma_start >= sigma_end > 0");
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Learning rate and neighborhood width used during `epoch`.
    pub fn schedule(&self, epoch: usize) -> (f64, f64) {
        let t = if self.epochs > 1 {
            epoch as f64 / (self.epochs - 1) as f64
        } else {
            0.0
        };
        (
            self.lr_start + (self.lr_end - self.lr_start) * t,
            self.sigma_start + (self.sigma_end - self.sigma_start) * t,
        )
    }
}

/// A map cell; `row` counts from the top, `col` from the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// A trained map together with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomModel {
    pub config: SomConfig,
    pub feature_kind: FeatureKind,
    pub dim: usize,
    pub standardizer: Standardizer,
    /// Row-major `rows x cols x dim` codebook in standardized units.
    pub codebook: Vec<f64>,
}

impl SomModel {
    /// Untrained model: codebook drawn uniformly from the per-dimension
    /// `[min, max]` of the standardized training data.
    pub fn initialize(
        features: &[Vec<f64>],
        kind: FeatureKind,
        config: &SomConfig,
    ) -> Result<Self> {
        Ok(Self::init_state(features, kind, config)?.0)
    }

    fn init_state(
        features: &[Vec<f64>],
        kind: FeatureKind,
        config: &SomConfig,
    ) -> Result<(Self, Vec<Vec<f64>>, ChaCha8Rng)> {
        config.validate()?;
        check_features(features)?;
        let sorted = canonical_order(features);
        let standardizer = Standardizer::fit(&sorted)?;
        let data: Vec<Vec<f64>> = sorted.iter().map(|f| standardizer.apply(f)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let codebook = init_codebook(&data, config.n_cells(), &mut rng);
        let model = Self {
            config: config.clone(),
            feature_kind: kind,
            dim: standardizer.dim(),
            standardizer,
            codebook,
        };
        Ok((model, data, rng))
    }

    pub fn rows(&self) -> usize {
        self.config.rows
    }

    pub fn cols(&self) -> usize {
        self.config.cols
    }

    pub fn unit(&self, cell: CellCoord) -> &[f64] {
        let i = (cell.row * self.config.cols + cell.col) * self.dim;
        &self.codebook[i..i + self.dim]
    }

    pub fn cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        let cols = self.config.cols;
        (0..self.config.n_cells()).map(move |i| CellCoord::new(i / cols, i % cols))
    }

    /// BMU of an already standardized vector and its squared distance.
    /// Ties resolve to the lexicographically smallest `(row, col)`.
    pub fn bmu_standardized(&self, z: &[f64]) -> (CellCoord, f64) {
        nearest_unit(&self.codebook, self.dim, z, self.config.cols)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SomModel = serde_json::from_str(text)?;
        model.config.validate()?;
        if model.codebook.len() != model.config.n_cells() * model.dim
            || model.standardizer.dim() != model.dim
        {
            return Err(Error::InvalidConfig(
                "codebook size does not match grid and dimension".into(),
            ));
        }
        if model.codebook.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn canonical_order(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut sorted = features.to_vec();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted
}

fn init_codebook(data: &[Vec<f64>], n_cells: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = data[0].len();
    let bounds: Vec<(f64, f64)> = (0..dim)
        .map(|d| {
            data.iter()
                .map(|z| z[d])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .collect();
    let mut codebook = Vec::with_capacity(n_cells * dim);
    for _ in 0..n_cells {
        for &(lo, hi) in &bounds {
            codebook.push(lo + (hi - lo) * rng.gen::<f64>());
        }
    }
    codebook
}

fn nearest_unit(codebook: &[f64], dim: usize, z: &[f64], cols: usize) -> (CellCoord, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, w) in codebook.chunks_exact(dim).enumerate() {
        let d2: f64 = w.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (CellCoord::new(best.0 / cols, best.0 % cols), best.1)
}

/// Trains a map on raw (unstandardized) features.
///
/// The result depends only on the multiset of features, the configuration and
/// the seed: inputs are put in a canonical order before the seeded shuffle.
pub fn train_som(features: &[Vec<f64>], kind: FeatureKind, config: &SomConfig) -> Result<SomModel> {
    let (mut model, data, mut rng) = SomModel::init_state(features, kind, config)?;

    let (rows, cols, dim) = (config.rows, config.cols, model.dim);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        let (lr, sigma) = config.schedule(epoch);
        let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
        order.shuffle(&mut rng);
        for &idx in &order {
            let x = &data[idx];
            let (bmu, _) = nearest_unit(&model.codebook, dim, x, cols);
            for r in 0..rows {
                let dr = r as f64 - bmu.row as f64;
                for c in 0..cols {
                    let dc = c as f64 - bmu.col as f64;
                    let h = lr * (-(dr * dr + dc * dc) * inv_two_sigma_sq).exp();
                    let base = (r * cols + c) * dim;
                    for (w, xv) in model.codebook[base..base + dim].iter_mut().zip(x) {
                        *w += h * (xv - *w);
                    }
                }
            }
        }
    }
    Ok(model)
}

/// BMU of a raw feature, standardized with the model's training-time scaling.
pub fn best_matching_unit(model: &SomModel, x: &[f64]) -> Result<CellCoord> {
    if x.len() != model.dim {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: model.dim,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(model.bmu_standardized(&model.standardizer.apply(x)).0)
}

/// Per-cell values laid out row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridValues {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn get(&self, cell: CellCoord) -> f64 {
        self.values[cell.row * self.cols + cell.col]
    }
}

/// Mean Euclidean distance from each unit to its 4-neighbors that exist.
pub fn u_matrix(model: &SomModel) -> GridValues {
    let (rows, cols) = (model.rows(), model.cols());
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let values = model
        .cells()
        .map(|cell| {
            let here = model.unit(cell);
            let (r, c) = (cell.row as isize, cell.col as isize);
            let neighbors: Vec<f64> = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                .into_iter()
                .filter(|&(nr, nc)| {
                    nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols
                })
                .map(|(nr, nc)| dist(here, model.unit(CellCoord::new(nr as usize, nc as usize))))
                .collect();
            neighbors.iter().sum::<f64>() / neighbors.len() as f64
        })
        .collect();
    GridValues { rows, cols, values }
}

/// Mean distance from each standardized feature to its BMU's codebook vector.
pub fn quantization_error(model: &SomModel, features: &[Vec<f64>]) -> Result<f64> {
    check_features(features)?;
    let mut total = 0.0;
    for f in features {
        if f.len() != model.dim {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: model.dim,
            });
        }
        total += model
            .bmu_standardized(&model.standardizer.apply(f))
            .1
            .sqrt();
    }
    Ok(total / features.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_model(rows: usize, cols: usize, codebook: Vec<f64>, dim: usize) -> SomModel {
        SomModel {
            config: SomConfig::with_grid(rows, cols),
            feature_kind: FeatureKind::Gonio,
            dim,
            standardizer: Standardizer {
                means: vec![0.0; dim],
                stds: vec![1.0; dim],
            },
            codebook,
        }
    }

    #[test]
    fn standardizer_moments() {
        let feats: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64, (i as f64 * 0.7).sin() * 3.0 + 10.0, 0.1])
            .collect();
        let s = Standardizer::fit(&feats).unwrap();
        let z: Vec<Vec<f64>> = feats.iter().map(|f| s.apply(f)).collect();
        for d in 0..2 {
            let mean = z.iter().map(|v| v[d]).sum::<f64>() / 50.0;
            let var = z.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        }
        assert!(z.iter().all(|v| v[2] == 0.0));
        for f in &feats {
            let back = s.invert(&s.apply(f));
            assert!(back.iter().zip(f).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn standardizer_rejects_empty() {
        assert!(matches!(Standardizer::fit(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn config_validation() {
        assert!(SomConfig::default().validate().is_ok());
        for c in [
            SomConfig {
                rows: 1,
                ..SomConfig::default()
            },
            SomConfig {
                lr_end: 0.9,
                ..SomConfig::default()
            },
            SomConfig {
                epochs: 0,
                ..SomConfig::default()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn bmu_exact_match_and_tie_break() {
        let (rows, cols) = (4, 6);
        let mut codebook = vec![10.0; rows * cols];
        codebook[2 * cols + 3] = 0.25;
        let model = identity_model(rows, cols, codebook, 1);
        assert_eq!(
            best_matching_unit(&model, &[0.25]).unwrap(),
            CellCoord::new(2, 3)
        );

        let mut codebook = vec![10.0; rows * cols];
        codebook[cols + 5] = 1.0;
        codebook[3 * cols] = -1.0;
        let model = identity_model(rows, cols, codebook, 1);
        assert_eq!(
            best_matching_unit(&model, &[0.0]).unwrap(),
            CellCoord::new(1, 5)
        );
        assert!(best_matching_unit(&model, &[f64::NAN]).is_err());
    }

    #[test]
    fn u_matrix_of_flat_map_is_zero() {
        let model = identity_model(3, 4, vec![1.5; 3 * 4 * 2], 2);
        assert!(u_matrix(&model).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quantization_error_examples() {
        let model = identity_model(2, 2, vec![0.0, 1.0, 2.0, 3.0], 1);
        assert_eq!(
            quantization_error(&model, &[vec![2.0], vec![3.0]]).unwrap(),
            0.0
        );
        assert!((quantization_error(&model, &[vec![3.4]]).unwrap() - 0.4).abs() < 1e-12);
        assert!(quantization_error(&model, &[]).is_err());
    }

    #[test]
    fn single_vector_collapses() {
        let feats = vec![vec![3.0, -1.0, 0.5, 7.0, 2.0, 1.0]; 100];
        let cfg = SomConfig {
            epochs: 50,
            ..SomConfig::with_grid(6, 5)
        };
        let model = train_som(&feats, FeatureKind::Mfcc, &cfg).unwrap();
        let target = model.standardizer.apply(&feats[0]);
        for w in model.codebook.chunks_exact(6) {
            assert!(w.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-3));
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let feats: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 / 3.0, (i * i) as f64 / 7.0])
            .collect();
        let cfg = SomConfig {
            epochs: 3,
            ..SomConfig::with_grid(3, 4)
        };
        let model = train_som(&feats, FeatureKind::Gonio, &cfg).unwrap();
        let back = SomModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
