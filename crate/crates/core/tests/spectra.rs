mod common;

use proptest::prelude::*;
use soundprofile_core::dsp::{dct_ii, frame_spectra, hann_window, DctPlan, FRAME_LEN};

#[test]
fn silence_gives_zero_frames() {
    let frames = frame_spectra(
        &vec![0.0; 8192],
        FRAME_LEN,
        1024,
        &hann_window(FRAME_LEN),
        44100.0,
    )
    .unwrap();
    assert_eq!(frames.len(), 7);
    for f in &frames {
        assert_eq!(f.magnitudes.len(), 1024);
        assert!(f.magnitudes.iter().all(|&m| m == 0.0));
    }
}

#[test]
fn exact_bin_sine_peaks_at_its_bin() {
    let rate = 44100.0;
    let rect = vec![1.0; FRAME_LEN];
    for k in [1usize, 17, 93, 512, 1000] {
        let freq = k as f64 * rate / FRAME_LEN as f64;
        let x = common::sine(FRAME_LEN * 2, freq, rate, 1.0);
        let frames = frame_spectra(&x, FRAME_LEN, 1024, &rect, rate).unwrap();
        for f in &frames {
            let argmax = f
                .magnitudes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, k);
            assert!((f.bin_width - rate / 2048.0).abs() < 1e-12);
        }
    }
}

#[test]
fn magnitudes_match_direct_dft() {
    let x = common::uniform_noise(FRAME_LEN * 3, 1.0, 7);
    let window = hann_window(FRAME_LEN);
    let frames = frame_spectra(&x, FRAME_LEN, 1024, &window, 44100.0).unwrap();
    assert_eq!(frames.len(), 5);
    for idx in [0usize, 3] {
        let windowed: Vec<f64> = x[idx * 1024..idx * 1024 + FRAME_LEN]
            .iter()
            .zip(&window)
            .map(|(a, b)| a * b)
            .collect();
        let oracle = common::dft_magnitudes(&windowed);
        for (got, want) in frames[idx].magnitudes.iter().zip(&oracle) {
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1.0),
                "{got} vs {want}"
            );
        }
    }
}

#[test]
fn dct_matches_double_sum() {
    for n in [1usize, 2, 7, 40, 64] {
        let v = common::uniform_noise(n, 3.0, n as u64);
        let got = dct_ii(&v, n).unwrap();
        let want = common::dct_direct(&v, n);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn dct_basis_is_orthonormal() {
    let n = 40;
    let plan = DctPlan::new(n, n).unwrap();
    // column j of the transform matrix is the transform of basis vector e_j
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            plan.transform(&e).unwrap()
        })
        .collect();
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = (0..n).map(|j| cols[j][a] * cols[j][b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn dct_then_transpose_is_identity(v in proptest::collection::vec(-10.0f64..10.0, 1..64)) {
        let n = v.len();
        let plan = DctPlan::new(n, n).unwrap();
        let c = plan.transform(&v).unwrap();
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                plan.transform(&e).unwrap()
            })
            .collect();
        for j in 0..n {
            let back: f64 = (0..n).map(|k| basis[j][k] * c[k]).sum();
            prop_assert!((back - v[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_count_formula(len in 2048usize..12000, hop in 1usize..3000) {
        let x = vec![0.0; len];
        let frames = frame_spectra(&x, 2048, hop, &hann_window(2048), 44100.0).unwrap();
        prop_assert_eq!(frames.len(), (len - 2048) / hop + 1);
    }
}
