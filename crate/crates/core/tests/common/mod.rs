#![allow(dead_code)]

use klnmf::synth::{generate, Noise, SynthConfig};
use klnmf::{DataMatrix, DenseMatrix, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn poisson(rows: usize, cols: usize, rank: usize, seed: u64) -> DataMatrix {
    let mut cfg = SynthConfig::new(rows, cols, rank);
    cfg.noise = Noise::Poisson;
    cfg.seed = seed;
    generate(&cfg).unwrap().v
}

/// Entries uniform in `[lo, lo + 1)`.
pub fn dense(rng: &mut Pcg64, rows: usize, cols: usize, lo: f64) -> DenseMatrix {
    let vals = (0..rows * cols).map(|_| lo + rng.random::<f64>()).collect();
    DenseMatrix::from_col_major(rows, cols, vals).unwrap()
}

/// Each entry present with probability `density`, value uniform in (0, 4).
pub fn sparse(rng: &mut Pcg64, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut trip = Vec::new();
    for c in 0..cols {
        for r in 0..rows {
            if rng.random::<f64>() < density {
                trip.push((r, c, 4.0 * (1.0 - rng.random::<f64>())));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, &trip).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest entrywise difference relative to the largest magnitude of `b`.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn rel_close_each(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| rel_diff(*x, *y) <= tol)
}
