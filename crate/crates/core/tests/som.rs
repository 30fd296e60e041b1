mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use soundprofile_core::analysis::{auto_region, point_in_region};
use soundprofile_core::som::{
    best_matching_unit, quantization_error, train_som, u_matrix, CellCoord, SomConfig, SomModel,
};
use soundprofile_core::FeatureKind;

/// Box-Muller standard normal.
fn gaussian(r: &mut impl Rng) -> f64 {
    let u: f64 = r.gen_range(f64::EPSILON..1.0);
    let v: f64 = r.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn cluster(r: &mut impl Rng, center: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| center.iter().map(|c| c + gaussian(r)).collect())
        .collect()
}

fn centers() -> Vec<Vec<f64>> {
    // pairwise distance 10 * sqrt(2) > 10 sigma
    vec![
        vec![10.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 10.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 10.0, 0.0, 0.0, 0.0],
    ]
}

#[test]
fn separated_clusters_get_disjoint_cells_and_regions() {
    let mut r = common::rng(3);
    let train: Vec<Vec<Vec<f64>>> = centers().iter().map(|c| cluster(&mut r, c, 40)).collect();
    let held: Vec<Vec<Vec<f64>>> = centers().iter().map(|c| cluster(&mut r, c, 40)).collect();
    let all: Vec<Vec<f64>> = train.iter().flatten().cloned().collect();
    let model = train_som(&all, FeatureKind::Gonio, &SomConfig::default()).unwrap();

    let sets: Vec<BTreeSet<CellCoord>> = train
        .iter()
        .map(|pts| {
            pts.iter()
                .map(|p| best_matching_unit(&model, p).unwrap())
                .collect()
        })
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(
                sets[i].is_disjoint(&sets[j]),
                "clusters {i} and {j} share cells"
            );
        }
    }
    for (i, set) in sets.iter().enumerate() {
        let cells: Vec<CellCoord> = set.iter().copied().collect();
        let region = auto_region(
            format!("c{i}"),
            format!("c{i}"),
            &cells,
            model.rows(),
            model.cols(),
        )
        .unwrap();
        let inside = held[i]
            .iter()
            .filter(|p| point_in_region(&region, best_matching_unit(&model, p).unwrap()))
            .count();
        assert!(
            inside as f64 >= 0.9 * held[i].len() as f64,
            "cluster {i}: {inside}/40"
        );
    }
}

#[test]
fn single_vector_collapses_map() {
    let v = vec![0.3, -2.0, 5.0, 1.0, 0.0, 7.5];
    let model = train_som(
        &vec![v.clone(); 5],
        FeatureKind::Mfcc,
        &SomConfig::with_grid(6, 4),
    )
    .unwrap();
    for cell in model.cells() {
        let back = model.standardizer.invert(model.unit(cell));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}

fn small_config(seed: u64) -> SomConfig {
    SomConfig {
        epochs: 30,
        seed,
        ..SomConfig::with_grid(8, 6)
    }
}

#[test]
fn same_seed_same_bytes() {
    let data = cluster(&mut common::rng(8), &[0.0; 6], 50);
    let a = train_som(&data, FeatureKind::Gonio, &small_config(5)).unwrap();
    let b = train_som(&data, FeatureKind::Gonio, &small_config(5)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = train_som(&data, FeatureKind::Gonio, &small_config(6)).unwrap();
    assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    let back = SomModel::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn input_order_does_not_matter() {
    let mut data = cluster(&mut common::rng(9), &[1.0; 6], 30);
    let a = train_som(&data, FeatureKind::Gonio, &small_config(1)).unwrap();
    data.shuffle(&mut common::rng(99));
    let b = train_som(&data, FeatureKind::Gonio, &small_config(1)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn bmu_matches_brute_force_scan() {
    let data = cluster(&mut common::rng(10), &[0.0; 6], 80);
    let model = train_som(&data, FeatureKind::Gonio, &small_config(2)).unwrap();
    let mut r = common::rng(11);
    for _ in 0..1000 {
        let q: Vec<f64> = (0..6).map(|_| 3.0 * gaussian(&mut r)).collect();
        let z: Vec<f64> = q
            .iter()
            .zip(
                model
                    .standardizer
                    .means
                    .iter()
                    .zip(&model.standardizer.stds),
            )
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let mut best = (CellCoord::new(0, 0), f64::INFINITY);
        for row in 0..model.rows() {
            for col in 0..model.cols() {
                let cell = CellCoord::new(row, col);
                let d: f64 = model
                    .unit(cell)
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                if d < best.1 {
                    best = (cell, d);
                }
            }
        }
        assert_eq!(best_matching_unit(&model, &q).unwrap(), best.0);
    }
}

#[test]
fn training_lowers_quantization_error() {
    let mut r = common::rng(12);
    let data: Vec<Vec<f64>> = centers()
        .iter()
        .flat_map(|c| cluster(&mut r, c, 30))
        .collect();
    let config = SomConfig::with_grid(10, 8);
    let init = SomModel::initialize(&data, FeatureKind::Gonio, &config).unwrap();
    let trained = train_som(&data, FeatureKind::Gonio, &config).unwrap();
    let before = quantization_error(&init, &data).unwrap();
    let after = quantization_error(&trained, &data).unwrap();
    assert!(after <= before, "{after} > {before}");

    // direct oracle for the error
    let mut total = 0.0;
    for x in &data {
        let z = trained.standardizer.apply(x);
        let d = trained
            .cells()
            .map(|c| {
                trained
                    .unit(c)
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        total += d;
    }
    assert!((after - total / data.len() as f64).abs() < 1e-12);
}

#[test]
fn u_matrix_matches_neighbour_average() {
    let data = cluster(&mut common::rng(13), &[0.0; 6], 40);
    let model = train_som(&data, FeatureKind::Gonio, &small_config(3)).unwrap();
    let u = u_matrix(&model);
    assert_eq!(u.values.len(), model.rows() * model.cols());
    for row in 0..model.rows() {
        for col in 0..model.cols() {
            let here = model.unit(CellCoord::new(row, col));
            let mut dists = Vec::new();
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (row as i64 + dr, col as i64 + dc);
                if nr < 0 || nc < 0 || nr >= model.rows() as i64 || nc >= model.cols() as i64 {
                    continue;
                }
                let there = model.unit(CellCoord::new(nr as usize, nc as usize));
                dists.push(
                    here.iter()
                        .zip(there)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                );
            }
            let want = dists.iter().sum::<f64>() / dists.len() as f64;
            assert!((u.get(CellCoord::new(row, col)) - want).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn codebook_vector_is_its_own_bmu(seed in any::<u64>()) {
        let data = cluster(&mut common::rng(seed), &[0.0; 6], 25);
        let model = train_som(&data, FeatureKind::Gonio, &small_config(seed)).unwrap();
        for cell in model.cells() {
            let raw = model.standardizer.invert(model.unit(cell));
            let got = best_matching_unit(&model, &raw).unwrap();
            // a duplicate codebook vector may win the tie, but never a farther one
            let d = |c: CellCoord| model.unit(c).iter().zip(model.unit(cell)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            prop_assert!(d(got) <= 1e-18 || got == cell);
        }
    }
}
