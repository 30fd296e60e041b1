//! Deterministic inputs for the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soundprofile_core::corpus::{StereoSegment, StereoSignal};

pub const RATE: u32 = 44_100;

/// Uniform noise in `[-amp, amp]`.
pub fn noise(n: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-amp..=amp)).collect()
}

/// Partly correlated stereo noise of the given length in seconds.
pub fn stereo(seconds: f64, seed: u64) -> StereoSegment {
    let n = (seconds * f64::from(RATE)) as usize;
    let common = noise(n, 0.5, seed);
    let side = noise(n, 0.2, seed + 1);
    let left = common.iter().zip(&side).map(|(c, s)| c + s).collect();
    let right = common.iter().zip(&side).map(|(c, s)| c - s).collect();
    StereoSegment::whole(StereoSignal::new(left, right, RATE).expect("samples within range"))
}

/// `n` feature vectors drawn around three centers.
pub fn features(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| if d == i % 3 { 5.0 } else { 0.0 } + rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect()
}
