mod common;

use common::*;
use klnmf::objective::{kl_divergence, partial_divergence, Axis};
use klnmf::tensor::{masked_ratio, matmul};
use klnmf::{DataMatrix, DenseMatrix};
use proptest::prelude::*;

/// Random data with some zero entries.
fn holey(seed: u64, rows: usize, cols: usize) -> DataMatrix {
    let mut g = rng(seed);
    let mut d = dense(&mut g, rows, cols, 0.0);
    let mask = dense(&mut g, rows, cols, 0.0);
    let vals: Vec<f64> = d
        .values()
        .iter()
        .zip(mask.values())
        .map(|(v, m)| if *m < 0.3 { 0.0 } else { 4.0 * v })
        .collect();
    d = DenseMatrix::from_col_major(rows, cols, vals).unwrap();
    DataMatrix::Dense(d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn non_negative_when_column_sums_match(seed in any::<u64>(), rows in 1usize..20, cols in 1usize..20) {
        let v = holey(seed, rows, cols);
        let mut z = dense(&mut rng(seed ^ 1), rows, cols, 0.01);
        let vs = v.column_sums();
        let zs = z.column_sums();
        let scale: Vec<f64> = vs.iter().zip(&zs).map(|(a, b)| if *a > 0.0 { a / b } else { 1e-300 }).collect();
        z.scale_columns(&scale).unwrap();
        let kl = kl_divergence(&v, &z).unwrap();
        prop_assert!(kl >= -1e-12 * v.sum(), "kl {kl}");
        prop_assert_eq!(kl_divergence(&v, &v.to_dense()).unwrap(), 0.0);
    }

    #[test]
    fn partial_scores_sum_to_total(seed in any::<u64>(), rows in 1usize..25, cols in 1usize..25, sparse_in in any::<bool>()) {
        let mut v = holey(seed, rows, cols);
        if sparse_in {
            v = DataMatrix::Sparse(klnmf::SparseMatrix::from_dense(&v.to_dense()));
        }
        let z = dense(&mut rng(seed ^ 2), rows, cols, 0.01);
        let q = masked_ratio(&v, &z).unwrap();
        let total = kl_divergence(&v, &z).unwrap();
        for axis in [Axis::Columns, Axis::Rows] {
            let scores = partial_divergence(&v, &q, &z, axis).unwrap();
            prop_assert!(rel_diff(scores.total(), total) <= 1e-10);
        }
    }

    #[test]
    fn invariant_under_rank_one_rescaling(seed in any::<u64>(), rank in 1usize..6) {
        let v = holey(seed, 12, 9);
        let mut g = rng(seed ^ 3);
        let mut w = dense(&mut g, 12, rank, 0.01);
        let mut h = dense(&mut g, rank, 9, 0.01);
        let before = kl_divergence(&v, &matmul(&w, &h).unwrap()).unwrap();
        // unit column mass for W, compensated in H
        let sums = w.column_sums();
        w.scale_columns(&sums.iter().map(|s| 1.0 / s).collect::<Vec<_>>()).unwrap();
        h.scale_rows(&sums).unwrap();
        let after = kl_divergence(&v, &matmul(&w, &h).unwrap()).unwrap();
        prop_assert!(rel_diff(before, after) <= 1e-12, "{before} vs {after}");
    }
}
