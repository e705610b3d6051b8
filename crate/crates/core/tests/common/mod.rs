#![allow(dead_code)]

use proptest::prelude::*;
use spartan_core::pruner::HpConfig;
use spartan_core::WeightMatrix;

/// Nonzero values so that "kept" and "nonzero" coincide.
pub fn nonzero() -> impl Strategy<Value = f32> {
    (-100i32..=100)
        .prop_filter("nonzero", |v| *v != 0)
        .prop_map(|v| v as f32 / 8.0)
}

pub fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = WeightMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(nonzero(), r * c).prop_map(move |v| WeightMatrix::new(r, c, v).unwrap())
    })
}

pub fn matrix_shaped(rows: usize, cols: usize) -> impl Strategy<Value = WeightMatrix> {
    prop::collection::vec(nonzero(), rows * cols).prop_map(move |v| WeightMatrix::new(rows, cols, v).unwrap())
}

pub fn hp(max_p: usize) -> impl Strategy<Value = HpConfig> {
    (1..=max_p, 0usize..=9).prop_flat_map(|(p, s)| {
        (1..=p).prop_map(move |k| HpConfig::new(p, s as f64 / 10.0, k).unwrap())
    })
}

/// Naive `K x M` times `M x N` in f64.
pub fn dense_mm(a: &WeightMatrix, b: &WeightMatrix) -> Vec<f64> {
    let (k, m, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; k * n];
    for i in 0..k {
        for j in 0..n {
            let mut acc = 0.0f64;
            for t in 0..m {
                acc += a.get(i, t) as f64 * b.get(t, j) as f64;
            }
            out[i * n + j] = acc;
        }
    }
    out
}
