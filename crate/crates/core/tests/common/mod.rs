//! Brute-force oracles shared by the integration tests. None of these touch
//! the FFT engine.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use stc_core::RealGrid;

/// O(N^2) forward DFT, unnormalized.
pub fn naive_dft(h: usize, w: usize, input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for u in 0..h {
        for v in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = sign * 2.0 * PI * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    acc += input[r * w + c] * Complex64::from_polar(1.0, phase);
                }
            }
            out[u * w + v] = if inverse { acc / (h * w) as f64 } else { acc };
        }
    }
    out
}

/// Circular convolution by direct summation.
pub fn naive_circular_conv(a: &RealGrid, b: &RealGrid) -> Vec<f64> {
    let (h, w) = a.dims();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..h {
                for j in 0..w {
                    acc += a.get(i, j) * b.get((r + h - i) % h, (c + w - j) % w);
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

pub fn random_grid(h: usize, w: usize, seed: u64) -> RealGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealGrid::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// Random grid whose spectrum magnitude is at least `floor` everywhere:
/// a random grid plus a scaled impulse at the origin, retried until the
/// brute-force spectrum clears the floor.
pub fn well_conditioned_grid(h: usize, w: usize, floor: f64, seed: u64) -> RealGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let vals: Vec<f64> = (0..h * w)
            .map(|i| rng.random_range(-0.2..0.2) + if i == 0 { 3.0 } else { 0.0 })
            .collect();
        let grid = RealGrid::new(h, w, vals).unwrap();
        let spec = naive_dft(h, w, &to_complex(grid.values()), false);
        if spec.iter().all(|z| z.norm() >= floor) {
            return grid;
        }
    }
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
