//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the crate's numeric code: DFTs are direct sums,
//! DCTs are the textbook double sum, mel triangles are re-derived from the
//! formula, and geometric oracles enumerate cells directly.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform white noise in `[-amp, amp]`.
pub fn uniform_noise(n: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-amp..=amp)).collect()
}

pub fn sine(n: usize, freq: f64, rate: f64, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / rate).sin())
        .collect()
}

/// O(N^2) DFT magnitudes of bins `0..N/2`.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let angle = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Orthonormal DCT-II by the defining double sum.
pub fn dct_direct(v: &[f64], n_out: usize) -> Vec<f64> {
    let n = v.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(i, x)| x * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                .sum();
            if k == 0 {
                s / n.sqrt()
            } else {
                s * (2.0 / n).sqrt()
            }
        })
        .collect()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// MFCCs of one 2048-sample frame: periodic Hann, direct DFT, explicit
/// triangle sums, natural log with floor, direct DCT.
pub fn mfcc_oracle_frame(
    frame: &[f64],
    rate: f64,
    n_filters: usize,
    n_coeffs: usize,
    floor: f64,
) -> Vec<f64> {
    let n = frame.len();
    let windowed: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(i, x)| x * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    let mags = dft_magnitudes(&windowed);
    let top = mel(rate / 2.0);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| inv_mel(top * i as f64 / (n_filters + 1) as f64))
        .collect();
    let log_e: Vec<f64> = (0..n_filters)
        .map(|j| {
            let (a, b, c) = (edges[j], edges[j + 1], edges[j + 2]);
            let mut e = 0.0;
            for (k, m) in mags.iter().enumerate() {
                let f = k as f64 * rate / n as f64;
                let w = if f >= a && f <= b {
                    (f - a) / (b - a)
                } else if f > b && f <= c {
                    (c - f) / (c - b)
                } else {
                    0.0
                };
                e += w * m;
            }
            (e + floor).ln()
        })
        .collect();
    dct_direct(&log_e, n_coeffs)
}

/// Cells of a `grid x grid` tiling of `[-span, span]^2` whose interior meets
/// the open diamond `|m| + |s| < span`.
pub fn diamond_cells(grid: usize, span: f64) -> usize {
    let w = 2.0 * span / grid as f64;
    let mut count = 0;
    for i in 0..grid {
        for j in 0..grid {
            let (m0, m1) = (-span + i as f64 * w, -span + (i + 1) as f64 * w);
            let (s0, s1) = (-span + j as f64 * w, -span + (j + 1) as f64 * w);
            let nearest = |lo: f64, hi: f64| {
                if lo > 0.0 {
                    lo
                } else if hi < 0.0 {
                    -hi
                } else {
                    0.0
                }
            };
            if nearest(m0, m1) + nearest(s0, s1) < span - 1e-9 {
                count += 1;
            }
        }
    }
    count
}

/// Winding number of a closed polygon around `p` (non-zero means inside).
pub fn winding_number(poly: &[(f64, f64)], p: (f64, f64)) -> i32 {
    let mut wn = 0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let is_left = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
        if a.1 <= p.1 {
            if b.1 > p.1 && is_left > 0.0 {
                wn += 1;
            }
        } else if b.1 <= p.1 && is_left < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Star-shaped simple polygon around `center` with random radii.
pub fn random_star(
    r: &mut ChaCha8Rng,
    center: (f64, f64),
    max_radius: f64,
    vertices: usize,
) -> Vec<(f64, f64)> {
    (0..vertices)
        .map(|i| {
            let angle = 2.0 * PI * (i as f64 + r.gen_range(0.1..0.9)) / vertices as f64;
            let radius = r.gen_range(0.3 * max_radius..max_radius);
            (
                center.0 + radius * angle.cos(),
                center.1 + radius * angle.sin(),
            )
        })
        .collect()
}

/// Adaptive Simpson integration.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Chi-squared upper tail by quadrature of the density.
///
/// df = 1 uses `t = u^2` to remove the singularity at zero, so
/// `sf(x) = 1 - sqrt(2/pi) * int_0^sqrt(x) exp(-u^2/2) du`.
pub fn chi2_sf_quadrature(x: f64, df: u32) -> f64 {
    if df == 1 {
        let g = |u: f64| (2.0 / PI).sqrt() * (-u * u / 2.0).exp();
        1.0 - integrate(&g, 0.0, x.sqrt(), 1e-14)
    } else {
        let k = f64::from(df) / 2.0;
        let norm = 2f64.powf(k) * gamma_int_or_half(df);
        let pdf = move |t: f64| t.powf(k - 1.0) * (-t / 2.0).exp() / norm;
        integrate(&pdf, x, x + 400.0, 1e-14)
    }
}

/// Gamma(df/2) for positive integer df via the recurrences from Gamma(1)
/// and Gamma(1/2).
fn gamma_int_or_half(df: u32) -> f64 {
    let mut k = f64::from(df) / 2.0;
    let mut acc = 1.0;
    while k > 1.0 {
        k -= 1.0;
        acc *= k;
    }
    if (k - 0.5).abs() < 1e-12 {
        acc * PI.sqrt()
    } else {
        acc
    }
}
